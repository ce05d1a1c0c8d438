#include "vitreg/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vitreg/error.hpp"

namespace vitreg {

std::string_view score_kind_name(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::kGE: return "GE";
    case ScoreKind::kLO: return "LO";
    case ScoreKind::kBrixia: return "Brixia";
    case ScoreKind::kCOVID: return "COVID";
    case ScoreKind::kSynthetic: return "synthetic";
  }
  return "synthetic";
}

ScoreKind parse_score_kind(std::string_view name) {
  for (ScoreKind k : {ScoreKind::kGE, ScoreKind::kLO, ScoreKind::kBrixia, ScoreKind::kCOVID, ScoreKind::kSynthetic}) {
    if (score_kind_name(k) == name) return k;
  }
  fail(ErrorKind::kIngest, "unknown score kind '" + std::string(name) + "'");
}

double score_max(ScoreKind kind) {
  switch (kind) {
    case ScoreKind::kBrixia: return 18.0;
    case ScoreKind::kCOVID: return 6.0;
    default: return 8.0;
  }
}

void validate_scores(double total, const std::optional<double>& left, const std::optional<double>& right,
                     ScoreKind kind) {
  const double hi = score_max(kind);
  const std::string kind_name(score_kind_name(kind));
  auto in_range = [&](double v, double max, const char* what) {
    require(std::isfinite(v) && v >= 0.0 && v <= max, ErrorKind::kIngest,
            std::string(what) + " " + std::to_string(v) + " outside [0, " + std::to_string(max) + "] for " +
                kind_name);
  };
  in_range(total, hi, "score_total");
  require(left.has_value() == right.has_value(), ErrorKind::kIngest,
          "score_left and score_right must be given together");
  if (left) {
    in_range(*left, hi / 2, "score_left");
    in_range(*right, hi / 2, "score_right");
    require(std::abs(*left + *right - total) <= 1e-6, ErrorKind::kIngest,
            "score_left + score_right does not equal score_total");
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& text, std::size_t line_no, const char* column) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  require(ec == std::errc() && ptr == text.data() + text.size(), ErrorKind::kIngest,
          "line " + std::to_string(line_no) + ": cannot parse " + column + " '" + text + "'");
  return v;
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::kIngest, "cannot open manifest '" + path.string() + "'");
  std::string line;
  require(static_cast<bool>(std::getline(in, line)), ErrorKind::kIngest, "manifest '" + path.string() + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require(line == kManifestHeader, ErrorKind::kIngest,
          "line 1: bad manifest header '" + line + "', expected '" + std::string(kManifestHeader) + "'");

  std::vector<ManifestRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    require(f.size() == 5, ErrorKind::kIngest,
            "line " + std::to_string(line_no) + ": expected 5 fields, found " + std::to_string(f.size()));
    ManifestRow row;
    row.image_path = f[0];
    require(!row.image_path.empty(), ErrorKind::kIngest, "line " + std::to_string(line_no) + ": empty image_path");
    row.score_total = parse_number(f[1], line_no, "score_total");
    if (!f[2].empty()) row.score_left = parse_number(f[2], line_no, "score_left");
    if (!f[3].empty()) row.score_right = parse_number(f[3], line_no, "score_right");
    try {
      row.score_kind = parse_score_kind(f[4]);
      validate_scores(row.score_total, row.score_left, row.score_right, row.score_kind);
    } catch (const Error& e) {
      fail(ErrorKind::kIngest, "line " + std::to_string(line_no) + ": " + e.what());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestRow>& rows) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorKind::kIo, "cannot write manifest '" + path.string() + "'");
  out << kManifestHeader << '\n';
  for (const ManifestRow& r : rows) {
    out << r.image_path << ',' << format_number(r.score_total) << ','
        << (r.score_left ? format_number(*r.score_left) : "") << ','
        << (r.score_right ? format_number(*r.score_right) : "") << ',' << score_kind_name(r.score_kind) << '\n';
  }
  require(out.good(), ErrorKind::kIo, "failed writing manifest '" + path.string() + "'");
}

std::vector<CxrSample> load_manifest(const std::filesystem::path& path) {
  const auto rows = read_manifest(path);
  const auto base = path.parent_path();
  std::vector<CxrSample> samples;
  samples.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ManifestRow& r = rows[i];
    const std::filesystem::path image_path = std::filesystem::path(r.image_path).is_absolute()
                                                 ? std::filesystem::path(r.image_path)
                                                 : base / r.image_path;
    require(std::filesystem::exists(image_path), ErrorKind::kIngest,
            "row " + std::to_string(i + 1) + ": image '" + image_path.string() + "' not found");
    CxrSample s;
    try {
      s.image = read_png(image_path);
    } catch (const Error& e) {
      fail(ErrorKind::kIngest, "row " + std::to_string(i + 1) + ": " + e.what());
    }
    s.score_total = r.score_total;
    s.score_left = r.score_left;
    s.score_right = r.score_right;
    s.score_kind = r.score_kind;
    s.source_id = r.image_path;
    samples.push_back(std::move(s));
  }
  return samples;
}

void PreprocessConfig::validate() const {
  require(target_height > 0 && target_width > 0, ErrorKind::kConfig, "preprocess target size must be positive");
  require(channels == 1 || channels == 3, ErrorKind::kConfig, "preprocess channels must be 1 or 3");
  for (int c = 0; c < channels; ++c) {
    require(normalize_std[c] > 0.0f, ErrorKind::kConfig, "normalize_std must be positive");
  }
}

Image resize_to_model(const Image& image, const PreprocessConfig& cfg) {
  cfg.validate();
  require(image.channels == 1 || image.channels == cfg.channels, ErrorKind::kIngest,
          "cannot map a " + std::to_string(image.channels) + "-channel image to " + std::to_string(cfg.channels) +
              " channels");
  return replicate_channels(resize_bilinear(image, cfg.target_height, cfg.target_width), cfg.channels);
}

void normalize_in_place(Image& image, const PreprocessConfig& cfg) {
  require(image.channels == cfg.channels, ErrorKind::kShape, "normalization channel mismatch");
  const std::size_t pixels = static_cast<std::size_t>(image.height) * image.width;
  for (std::size_t i = 0; i < pixels; ++i) {
    for (int c = 0; c < image.channels; ++c) {
      float& v = image.pixels[i * image.channels + c];
      v = (v - cfg.normalize_mean[c]) / cfg.normalize_std[c];
    }
  }
}

Image preprocess(const CxrSample& sample, const PreprocessConfig& cfg) {
  Image out = resize_to_model(sample.image, cfg);
  normalize_in_place(out, cfg);
  return out;
}

}  // namespace vitreg
