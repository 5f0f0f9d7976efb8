#include "cmsm/dataset_io.hpp"

#include "cmsm/binary_io.hpp"

namespace cmsm {

namespace {

void put_image(io::Writer &w, Image<float> const &img) {
  for (auto const &v : img.data) {
    w.put(v.real());
    w.put(v.imag());
  }
}

Image<float> get_image(io::Reader &r, int h, int w) {
  Image<float> img(h, w);
  r.need(img.size() * 2 * sizeof(float));
  for (auto &v : img.data) {
    float const re = r.get<float>();
    float const im = r.get<float>();
    v = {re, im};
  }
  return img;
}

}  // namespace

std::vector<std::uint8_t> encode_dataset(std::vector<DatasetRecord> const &records) {
  io::Writer w;
  w.put_bytes(std::string_view(kDatasetMagic, 4));
  w.put(kDatasetVersion);
  w.put(static_cast<std::uint32_t>(records.size()));
  for (auto const &rec : records) {
    int const h = rec.ground_truth.height, wd = rec.ground_truth.width;
    int const nc = rec.true_maps.n_coils();
    if (rec.z.n_coils() != nc || rec.z.height() != h || rec.z.width() != wd || rec.mask.width != wd) {
      throw ShapeError("save_dataset: inconsistent record shapes");
    }
    w.put(static_cast<std::uint32_t>(h));
    w.put(static_cast<std::uint32_t>(wd));
    w.put(static_cast<std::uint32_t>(nc));
    w.put(rec.eta);
    put_image(w, rec.ground_truth);
    for (auto const &c : rec.true_maps.coils) put_image(w, c);
    for (auto const &c : rec.z.coils) put_image(w, c);
    std::vector<std::uint8_t> packed(static_cast<std::size_t>((wd + 7) / 8), 0);
    for (int x = 0; x < wd; ++x) {
      if (rec.mask.selected(x)) packed[static_cast<std::size_t>(x / 8)] |= std::uint8_t(1u << (x % 8));
    }
    w.put_bytes(packed);
    w.put(static_cast<std::uint32_t>(rec.mask.acs_width));
  }
  return w.bytes();
}

std::vector<DatasetRecord> decode_dataset(std::vector<std::uint8_t> bytes) {
  io::Reader r(std::move(bytes), "dataset");
  io::expect_magic(r, std::string_view(kDatasetMagic, 4));
  auto const version = r.get<std::uint32_t>();
  if (version != kDatasetVersion) {
    throw VersionError("dataset: unsupported version " + std::to_string(version));
  }
  auto const count = r.get<std::uint32_t>();
  std::vector<DatasetRecord> records;
  for (std::uint32_t i = 0; i < count; ++i) {
    int const h = static_cast<int>(r.get<std::uint32_t>());
    int const w = static_cast<int>(r.get<std::uint32_t>());
    int const nc = static_cast<int>(r.get<std::uint32_t>());
    if (h <= 0 || w <= 0 || nc <= 0 || h > 4096 || w > 4096 || nc > 256) {
      throw DataError("dataset: implausible record header in record " + std::to_string(i));
    }
    DatasetRecord rec;
    rec.eta = r.get<float>();
    rec.ground_truth = get_image(r, h, w);
    for (int k = 0; k < nc; ++k) rec.true_maps.coils.push_back(get_image(r, h, w));
    rec.z.mask = Mask::full(h, w);
    for (int k = 0; k < nc; ++k) rec.z.coils.push_back(get_image(r, h, w));
    std::vector<std::uint8_t> packed(static_cast<std::size_t>((w + 7) / 8));
    for (auto &b : packed) b = r.get<std::uint8_t>();
    int const acs = static_cast<int>(r.get<std::uint32_t>());
    if (acs > w) throw DataError("dataset: acs_width exceeds width in record " + std::to_string(i));
    rec.mask = Mask(h, w, acs);
    for (int x = 0; x < w; ++x) rec.mask.columns[static_cast<std::size_t>(x)] = (packed[static_cast<std::size_t>(x / 8)] >> (x % 8)) & 1u;
    records.push_back(std::move(rec));
  }
  if (!r.at_end()) throw DataError("dataset: trailing bytes after last record");
  return records;
}

void save_dataset(std::vector<DatasetRecord> const &records, std::filesystem::path const &path) {
  io::write_file_atomic(path, encode_dataset(records));
}

std::vector<DatasetRecord> load_dataset(std::filesystem::path const &path) {
  return decode_dataset(io::read_file(path));
}

}  // namespace cmsm
