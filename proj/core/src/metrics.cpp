#include "cmsm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace cmsm {

double psnr(std::vector<double> const &reference, std::vector<double> const &estimate) {
  if (reference.size() != estimate.size() || reference.empty()) throw ShapeError("psnr: size mismatch");
  double const peak = *std::max_element(reference.begin(), reference.end());
  if (!(peak > 0)) throw std::invalid_argument("psnr: reference image is zero");
  double se = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    double const d = reference[i] - estimate[i];
    se += d * d;
  }
  if (se == 0) return std::numeric_limits<double>::infinity();
  double const rmse = std::sqrt(se / double(reference.size()));
  return 20.0 * std::log10(peak / rmse);
}

namespace {

std::vector<double> gaussian_kernel(int size, double sigma) {
  std::vector<double> k(static_cast<std::size_t>(size));
  double const c = (size - 1) / 2.0;
  double sum = 0;
  for (int i = 0; i < size; ++i) {
    k[i] = std::exp(-((i - c) * (i - c)) / (2 * sigma * sigma));
    sum += k[i];
  }
  for (auto &v : k) v /= sum;
  return k;
}

// Separable "valid" filtering: output is (h-size+1) x (w-size+1).
std::vector<double> filter_valid(std::vector<double> const &img, int h, int w, std::vector<double> const &k) {
  int const n = static_cast<int>(k.size());
  int const ow = w - n + 1, oh = h - n + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += k[i] * img[static_cast<std::size_t>(y) * w + x + i];
      rows[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += k[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

double ssim(std::vector<double> const &ref, std::vector<double> const &est, int h, int w, SsimOptions const &opt) {
  if (ref.size() != est.size() || ref.size() != static_cast<std::size_t>(h) * w) throw ShapeError("ssim: size mismatch");
  if (h < opt.window || w < opt.window) throw std::invalid_argument("ssim: image smaller than the window");
  double const range = *std::max_element(ref.begin(), ref.end());
  if (!(range > 0)) throw std::invalid_argument("ssim: reference image is zero");
  double const c1 = (opt.k1 * range) * (opt.k1 * range);
  double const c2 = (opt.k2 * range) * (opt.k2 * range);
  auto const k = gaussian_kernel(opt.window, opt.gaussian_sigma);

  std::vector<double> xx(ref.size()), yy(ref.size()), xy(ref.size());
  for (std::size_t i = 0; i < ref.size(); ++i) {
    xx[i] = ref[i] * ref[i];
    yy[i] = est[i] * est[i];
    xy[i] = ref[i] * est[i];
  }
  auto const mx = filter_valid(ref, h, w, k);
  auto const my = filter_valid(est, h, w, k);
  auto const sxx = filter_valid(xx, h, w, k);
  auto const syy = filter_valid(yy, h, w, k);
  auto const sxy = filter_valid(xy, h, w, k);
  double sum = 0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    double const vx = sxx[i] - mx[i] * mx[i];
    double const vy = syy[i] - my[i] * my[i];
    double const cxy = sxy[i] - mx[i] * my[i];
    sum += ((2 * mx[i] * my[i] + c1) * (2 * cxy + c2)) / ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
  }
  return sum / double(mx.size());
}

std::string metrics_csv(std::vector<MetricReport> const &reports) {
  std::ostringstream out;
  out << "method,R,seed,psnr_db,ssim\n";
  out << std::setprecision(17);
  for (auto const &r : reports) {
    out << r.method << ',' << r.acceleration << ',' << r.seed << ',' << r.psnr_db << ',' << r.ssim << '\n';
  }
  return out.str();
}

std::vector<MetricReport> parse_metrics_csv(std::string const &text) {
  std::istringstream in(text);
  std::string line;
  std::vector<MetricReport> rows;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (lineno == 1 && line.rfind("method,", 0) == 0) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5) throw DataError("metrics csv: line " + std::to_string(lineno) + " does not have 5 columns");
    try {
      MetricReport r;
      r.method = cells[0];
      r.acceleration = std::stod(cells[1]);
      r.seed = std::stoull(cells[2]);
      r.psnr_db = std::stod(cells[3]);
      r.ssim = std::stod(cells[4]);
      rows.push_back(r);
    } catch (std::exception const &) {
      throw DataError("metrics csv: malformed number on line " + std::to_string(lineno));
    }
  }
  return rows;
}

}  // namespace cmsm
