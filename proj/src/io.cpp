// SPDX-License-Identifier: Apache-2.0

#include "defly/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace defly {

namespace {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "file I/O assumes a little-endian host");

struct PngData {
  int width = 0;
  int height = 0;
  int bit_depth = 0;
  int color_type = 0;
  size_t row_bytes = 0;
  std::vector<uint8_t> rows;  // row-major, row_bytes per row

  const uint16_t* row16(int y) const {
    return reinterpret_cast<const uint16_t*>(rows.data() + row_bytes * y);
  }
  const uint8_t* row8(int y) const { return rows.data() + row_bytes * y; }
};

PngData read_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw IoError("cannot open " + path);

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw IoError("libpng initialization failed");
  }

  PngData img;
  std::vector<png_bytep> row_ptrs;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw IoError("failed to decode PNG: " + path);
  }

  png_init_io(png, fp);
  png_read_info(png, info);
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.bit_depth = png_get_bit_depth(png, info);
  img.color_type = png_get_color_type(png, info);
  if (img.bit_depth == 16) png_set_swap(png);  // file is big-endian
  png_read_update_info(png, info);
  img.row_bytes = png_get_rowbytes(png, info);
  img.rows.resize(img.row_bytes * img.height);
  row_ptrs.resize(img.height);
  for (int y = 0; y < img.height; ++y) {
    row_ptrs[y] = img.rows.data() + img.row_bytes * y;
  }
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

void write_png_gray(const std::string& path, int width, int height,
                    int bit_depth, const std::vector<uint8_t>& rows) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot open for writing: " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr,
                                            nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("libpng initialization failed");
  }

  const size_t row_bytes = static_cast<size_t>(width) * (bit_depth / 8);
  std::vector<png_bytep> row_ptrs(height);
  for (int y = 0; y < height; ++y) {
    row_ptrs[y] = const_cast<png_bytep>(rows.data() + row_bytes * y);
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("failed to encode PNG: " + path);
  }

  png_init_io(png, fp);
  png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  if (bit_depth == 16) png_set_swap(png);  // rows are host little-endian
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string strip_report_extension(const std::string& path) {
  for (const char* ext : {".csv", ".json"}) {
    if (has_suffix(path, ext)) return path.substr(0, path.size() - strlen(ext));
  }
  return path;
}

double require_number(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number()) {
    throw ValidationError(std::string("intrinsics: missing numeric key ") + key);
  }
  const double v = j[key].get<double>();
  if (!std::isfinite(v)) {
    throw ValidationError(std::string("intrinsics: non-finite value for ") + key);
  }
  return v;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

IntrinsicsFile load_intrinsics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("cannot parse intrinsics JSON: " + std::string(e.what()));
  }
  IntrinsicsFile f{
      Intrinsics(require_number(j, "fx"), require_number(j, "fy"),
                 require_number(j, "cx"), require_number(j, "cy"),
                 static_cast<int>(require_number(j, "width")),
                 static_cast<int>(require_number(j, "height")),
                 require_number(j, "fov_h_deg"),
                 require_number(j, "fov_v_deg")),
      j.value("depth_unit", "m"), require_number(j, "depth_scale")};
  if (!(f.depth_scale > 0.0)) {
    throw ValidationError("intrinsics: depth_scale must be > 0");
  }
  return f;
}

void save_intrinsics(const IntrinsicsFile& file, const std::string& path) {
  const Intrinsics& k = file.intrinsics;
  json j{{"fx", k.fx()},
         {"fy", k.fy()},
         {"cx", k.cx()},
         {"cy", k.cy()},
         {"width", k.width()},
         {"height", k.height()},
         {"fov_h_deg", k.fov_h_deg()},
         {"fov_v_deg", k.fov_v_deg()},
         {"depth_unit", file.depth_unit},
         {"depth_scale", file.depth_scale}};
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

DepthImage load_depth(const std::string& path, double depth_scale,
                      const std::string& unit) {
  if (!(depth_scale > 0.0)) {
    throw ValidationError("load depth: depth_scale must be > 0");
  }
  if (has_suffix(path, ".pfm")) {
    int w = 0, h = 0;
    std::vector<float> raw = load_pfm(path, &w, &h);
    for (float& v : raw) v = static_cast<float>(v * depth_scale);
    return DepthImage(w, h, std::move(raw), unit);
  }
  if (!has_suffix(path, ".png")) {
    throw ValidationError("load depth: expected a .png or .pfm file: " + path);
  }
  const PngData img = read_png(path);
  if (img.color_type != PNG_COLOR_TYPE_GRAY) {
    throw ValidationError("load depth: expected single-channel PNG: " + path);
  }
  if (img.bit_depth != 16) {
    throw ValidationError("load depth: expected 16-bit PNG: " + path);
  }
  std::vector<float> values(static_cast<size_t>(img.width) * img.height);
  for (int y = 0; y < img.height; ++y) {
    const uint16_t* row = img.row16(y);
    for (int x = 0; x < img.width; ++x) {
      values[static_cast<size_t>(y) * img.width + x] =
          static_cast<float>(row[x] * depth_scale);  // 0 stays invalid
    }
  }
  return DepthImage(img.width, img.height, std::move(values), unit);
}

void save_depth_png(const DepthImage& depth, const std::string& path,
                    double depth_scale) {
  if (!(depth_scale > 0.0)) {
    throw ValidationError("save depth: depth_scale must be > 0");
  }
  const int w = depth.width();
  const int h = depth.height();
  std::vector<uint8_t> rows(static_cast<size_t>(w) * h * 2);
  uint16_t* out = reinterpret_cast<uint16_t*>(rows.data());
  for (size_t i = 0; i < depth.values().size(); ++i) {
    const float d = depth.values()[i];
    uint16_t code = 0;
    if (DepthImage::is_valid_depth(d)) {
      const double k = std::llround(static_cast<double>(d) / depth_scale);
      code = static_cast<uint16_t>(std::clamp(k, 0.0, 65535.0));
    }
    out[i] = code;
  }
  write_png_gray(path, w, h, 16, rows);
}

void save_depth_pfm(const DepthImage& depth, const std::string& path) {
  std::vector<float> values(depth.values().begin(), depth.values().end());
  for (float& v : values) {
    if (!DepthImage::is_valid_depth(v)) v = 0.0f;
  }
  save_pfm(values, depth.width(), depth.height(), path);
}

std::vector<float> load_pfm(const std::string& path, int* width, int* height) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic == "PF") {
    throw ValidationError("load pfm: expected single-channel Pf, got color PF");
  }
  if (magic != "Pf") throw ValidationError("load pfm: not a PFM file: " + path);
  int w = 0, h = 0;
  double scale = 0.0;
  in >> w >> h >> scale;
  if (!in || w <= 0 || h <= 0 || scale == 0.0) {
    throw ValidationError("load pfm: malformed header: " + path);
  }
  in.get();  // single whitespace byte after the scale line
  std::vector<float> data(static_cast<size_t>(w) * h);
  // Scanlines are stored bottom-to-top.
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(data.data() + static_cast<size_t>(y) * w),
            static_cast<std::streamsize>(w) * 4);
  }
  if (!in) throw IoError("load pfm: truncated data: " + path);
  if (scale > 0.0) {  // big-endian payload
    for (float& v : data) {
      uint32_t bits;
      std::memcpy(&bits, &v, 4);
      bits = __builtin_bswap32(bits);
      std::memcpy(&v, &bits, 4);
    }
  }
  *width = w;
  *height = h;
  return data;
}

void save_pfm(std::span<const float> values, int width, int height,
              const std::string& path) {
  if (values.size() != static_cast<size_t>(width) * height) {
    throw ValidationError("save pfm: value count does not match dims");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "Pf\n" << width << " " << height << "\n-1.0\n";
  for (int y = height - 1; y >= 0; --y) {
    out.write(
        reinterpret_cast<const char*>(values.data() + static_cast<size_t>(y) * width),
        static_cast<std::streamsize>(width) * 4);
  }
  if (!out) throw IoError("save pfm: write failed: " + path);
}

ColorImage load_rgb(const std::string& path) {
  const PngData img = read_png(path);
  if (img.color_type != PNG_COLOR_TYPE_RGB) {
    throw ValidationError("load rgb: expected a 3-channel PNG: " + path);
  }
  if (img.bit_depth != 8 && img.bit_depth != 16) {
    throw ValidationError("load rgb: expected 8- or 16-bit PNG: " + path);
  }
  std::vector<float> rgb(static_cast<size_t>(img.width) * img.height * 3);
  if (img.bit_depth == 8) {
    for (int y = 0; y < img.height; ++y) {
      const uint8_t* row = img.row8(y);
      for (size_t k = 0; k < static_cast<size_t>(img.width) * 3; ++k) {
        rgb[static_cast<size_t>(y) * img.width * 3 + k] = row[k] / 255.0f;
      }
    }
  } else {
    for (int y = 0; y < img.height; ++y) {
      const uint16_t* row = img.row16(y);
      for (size_t k = 0; k < static_cast<size_t>(img.width) * 3; ++k) {
        rgb[static_cast<size_t>(y) * img.width * 3 + k] = row[k] / 65535.0f;
      }
    }
  }
  return ColorImage(img.width, img.height, std::move(rgb));
}

std::vector<uint8_t> load_mask_png(const std::string& path, int expect_width,
                                   int expect_height) {
  const PngData img = read_png(path);
  if (img.color_type != PNG_COLOR_TYPE_GRAY || img.bit_depth != 8) {
    throw ValidationError("load mask: expected an 8-bit grayscale PNG: " + path);
  }
  if (img.width != expect_width || img.height != expect_height) {
    throw ValidationError("load mask: dimension mismatch: " + path);
  }
  std::vector<uint8_t> mask(static_cast<size_t>(img.width) * img.height);
  for (int y = 0; y < img.height; ++y) {
    const uint8_t* row = img.row8(y);
    for (int x = 0; x < img.width; ++x) {
      mask[static_cast<size_t>(y) * img.width + x] = row[x] != 0 ? 1 : 0;
    }
  }
  return mask;
}

void save_mask_png(std::span<const uint8_t> mask, int width, int height,
                   const std::string& path) {
  if (mask.size() != static_cast<size_t>(width) * height) {
    throw ValidationError("save mask: size does not match dims");
  }
  std::vector<uint8_t> rows(mask.size());
  for (size_t i = 0; i < mask.size(); ++i) rows[i] = mask[i] ? 255 : 0;
  write_png_gray(path, width, height, 8, rows);
}

void export_ply(const OrganizedCloud& cloud, const ColorImage& rgb,
                const std::string& path, PlyFormat format) {
  if (rgb.width() % cloud.width() != 0 ||
      rgb.height() % cloud.height() != 0 ||
      rgb.width() / cloud.width() != rgb.height() / cloud.height()) {
    throw ValidationError("export ply: color resolution is not an integer "
                          "multiple of the cloud grid");
  }
  const int s = rgb.width() / cloud.width();

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "ply\n"
      << (format == PlyFormat::kAscii ? "format ascii 1.0\n"
                                      : "format binary_little_endian 1.0\n")
      << "element vertex " << cloud.valid_count() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "end_header\n";

  for (int v = 0; v < cloud.height(); ++v) {
    for (int u = 0; u < cloud.width(); ++u) {
      const OrganizedCloud::Point& pt = cloud.at(u, v);
      if (!pt.valid) continue;
      double mean[3] = {0.0, 0.0, 0.0};
      for (int dy = 0; dy < s; ++dy) {
        for (int dx = 0; dx < s; ++dx) {
          const float* px = rgb.pixel(u * s + dx, v * s + dy);
          for (int c = 0; c < 3; ++c) mean[c] += px[c];
        }
      }
      uint8_t color[3];
      for (int c = 0; c < 3; ++c) {
        color[c] = static_cast<uint8_t>(
            std::lround(255.0 * mean[c] / (static_cast<double>(s) * s)));
      }
      const float xyz[3] = {static_cast<float>(pt.position.x()),
                            static_cast<float>(pt.position.y()),
                            static_cast<float>(pt.position.z())};
      if (format == PlyFormat::kAscii) {
        char line[128];
        std::snprintf(line, sizeof(line), "%.9g %.9g %.9g %d %d %d\n", xyz[0],
                      xyz[1], xyz[2], color[0], color[1], color[2]);
        out << line;
      } else {
        out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
        out.write(reinterpret_cast<const char*>(color), sizeof(color));
      }
    }
  }
  if (!out) throw IoError("export ply: write failed: " + path);
}

void write_report(const EvalReport& report, const std::string& path) {
  if (report.methods.empty()) {
    throw ValidationError("write report: nothing to write");
  }
  const std::string base = strip_report_extension(path);

  std::ofstream csv(base + ".csv");
  if (!csv) throw IoError("cannot open for writing: " + base + ".csv");
  csv << "scene,method,rmse_all,mae_all,rmse_fp,mae_fp,n_fp,iterations\n";
  for (const MethodResult& m : report.methods) {
    csv << report.scene << "," << m.method << "," << format_double(m.rmse_all)
        << "," << format_double(m.mae_all) << ","
        << (m.rmse_fp ? format_double(*m.rmse_fp) : "") << ","
        << (m.mae_fp ? format_double(*m.mae_fp) : "") << "," << m.n_fp << ","
        << m.iterations << "\n";
  }
  if (!csv) throw IoError("write report: CSV write failed");

  json j;
  j["scene"] = report.scene;
  j["parameters"] = {{"ws", report.config.ws()},
                     {"tau", report.config.tau_percent()},
                     {"sigma_c", report.config.sigma_color()},
                     {"sigma_s", report.config.sigma_spatial()},
                     {"epsilon", report.config.epsilon()},
                     {"iterations", report.config.iterations()},
                     {"method", method_name(report.config.method())},
                     {"seed", report.config.seed()}};
  j["methods"] = json::array();
  for (const MethodResult& m : report.methods) {
    json row{{"method", m.method},
             {"rmse_all", m.rmse_all},
             {"mae_all", m.mae_all},
             {"n_fp", m.n_fp},
             {"n_valid", m.n_valid},
             {"iterations", m.iterations}};
    row["rmse_fp"] = m.rmse_fp ? json(*m.rmse_fp) : json(nullptr);
    row["mae_fp"] = m.mae_fp ? json(*m.mae_fp) : json(nullptr);
    j["methods"].push_back(std::move(row));
  }
  j["proposed_iterations"] = json::array();
  for (const IterationReport& it : report.proposed_iterations) {
    j["proposed_iterations"].push_back({{"iteration", it.iteration},
                                        {"candidates", it.candidate_count},
                                        {"corrected", it.corrected_count},
                                        {"skipped", it.skipped_count},
                                        {"mean_abs_t", it.mean_abs_t}});
  }
  std::ofstream js(base + ".json");
  if (!js) throw IoError("cannot open for writing: " + base + ".json");
  js << j.dump(2) << "\n";
  if (!js) throw IoError("write report: JSON write failed");
}

void save_injection_record(const InjectionRecord& record,
                           const std::string& path) {
  json j{{"width", record.width},
         {"height", record.height},
         {"fraction", record.fraction},
         {"ws", record.ws},
         {"seed", record.seed},
         {"rng_algorithm", record.rng_algorithm},
         {"count", record.count()}};
  j["entries"] = json::array();
  for (const InjectionRecord::Entry& e : record.entries) {
    j["entries"].push_back({{"index", e.index},
                            {"u", e.index % record.width},
                            {"v", e.index / record.width},
                            {"original_depth", e.original_depth},
                            {"injected_depth", e.injected_depth},
                            {"window_min", e.window_min},
                            {"window_max", e.window_max}});
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
}

}  // namespace defly
