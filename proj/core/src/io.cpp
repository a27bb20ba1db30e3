#include "specaug/io.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace specaug::io {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

[[noreturn]] void parse_fail(const std::string& source, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError, source + ":" + std::to_string(line) + ": " + what);
}

double parse_field(std::string_view text, const std::string& source, std::size_t line) {
  try {
    return parse_double(text);
  } catch (const Error&) {
    parse_fail(source, line, "expected a number, got '" + std::string(text) + "'");
  }
}

bool is_number(std::string_view text) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write '" + path.string() + "'");
  return out;
}

std::vector<std::string> band_header(std::size_t bands) {
  std::vector<std::string> header;
  header.reserve(bands);
  for (std::size_t b = 0; b < bands; ++b) header.push_back("band_" + std::to_string(b));
  return header;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error(ErrorCode::IoError, "cannot format number");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::ParseError, "not a number: '" + std::string(text) + "'");
  }
  return v;
}

std::vector<KeyValue> parse_key_values(std::istream& in, const std::string& source) {
  std::vector<KeyValue> out;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto text = trim(raw);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) parse_fail(source, line, "expected key=value");
    const auto key = trim(text.substr(0, eq));
    if (key.empty()) parse_fail(source, line, "empty key");
    out.push_back({std::string(key), std::string(trim(text.substr(eq + 1))), line});
  }
  return out;
}

SpectralLibrary read_library_csv(std::istream& in, const std::string& source) {
  std::string raw;
  std::size_t line = 0;
  if (!std::getline(in, raw)) parse_fail(source, 1, "missing header");
  ++line;
  const auto header = split_csv(raw);
  if (header.empty() || header[0] != "material") {
    parse_fail(source, line, "header must start with 'material'");
  }
  const bool has_synthetic = header.size() > 1 && header[1] == "synthetic";
  const std::size_t first_band = has_synthetic ? 2 : 1;
  if (header.size() <= first_band) parse_fail(source, line, "header lists no bands");
  const std::size_t bands = header.size() - first_band;

  std::vector<MaterialClass> classes;
  std::map<std::string, std::size_t, std::less<>> index;
  while (std::getline(in, raw)) {
    ++line;
    if (trim(raw).empty()) continue;
    const auto fields = split_csv(raw);
    if (fields.size() != header.size()) {
      parse_fail(source, line, "expected " + std::to_string(header.size()) + " fields, got " +
                                   std::to_string(fields.size()));
    }
    Spectrum s;
    s.label = std::string(fields[0]);
    if (s.label.empty()) parse_fail(source, line, "empty material id");
    if (has_synthetic) {
      if (fields[1] != "0" && fields[1] != "1") parse_fail(source, line, "synthetic must be 0 or 1");
      s.provenance.synthetic = fields[1] == "1";
    }
    s.values.reserve(bands);
    for (std::size_t b = first_band; b < fields.size(); ++b) {
      s.values.push_back(parse_field(fields[b], source, line));
    }
    auto [it, inserted] = index.try_emplace(s.label, classes.size());
    if (inserted) classes.push_back({s.label, {}});
    auto& members = classes[it->second].members;
    if (s.provenance.synthetic) {
      std::size_t draws = 0;
      for (const auto& m : members) draws += m.provenance.synthetic ? 1 : 0;
      s.provenance.draw_index = draws;
    }
    members.push_back(std::move(s));
  }
  return SpectralLibrary(std::move(classes));
}

SpectralLibrary read_library_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_library_csv(in, path.string());
}

void write_library_csv(std::ostream& out, const SpectralLibrary& lib, bool synthetic_column) {
  out << "material";
  if (synthetic_column) out << ",synthetic";
  for (const auto& name : band_header(lib.bands())) out << ',' << name;
  out << '\n';
  for (const auto& cls : lib.classes()) {
    for (const auto& s : cls.members) {
      out << cls.material;
      if (synthetic_column) out << ',' << (s.provenance.synthetic ? 1 : 0);
      for (double v : s.values) out << ',' << format_double(v);
      out << '\n';
    }
  }
}

void write_library_csv(const std::filesystem::path& path, const SpectralLibrary& lib,
                       bool synthetic_column) {
  auto out = open_output(path);
  write_library_csv(out, lib, synthetic_column);
}

RowMatrix read_matrix_csv(std::istream& in, const std::string& source) {
  std::vector<std::vector<double>> rows;
  std::string raw;
  std::size_t line = 0;
  std::size_t width = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (trim(raw).empty()) continue;
    const auto fields = split_csv(raw);
    if (rows.empty() && width == 0 && !is_number(fields[0])) {
      width = fields.size();  // header row
      continue;
    }
    if (width == 0) width = fields.size();
    if (fields.size() != width) {
      parse_fail(source, line, "expected " + std::to_string(width) + " fields, got " +
                                   std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(width);
    for (auto f : fields) row.push_back(parse_field(f, source, line));
    rows.push_back(std::move(row));
  }
  RowMatrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

HyperImage read_image_csv(std::istream& in, const std::string& source) {
  RowMatrix pixels = read_matrix_csv(in, source);
  if (pixels.rows() == 0) throw Error(ErrorCode::ParseError, source + ": image has no pixels");
  return HyperImage(std::move(pixels));
}

std::filesystem::path sidecar_path(const std::filesystem::path& image_path) {
  auto p = image_path;
  p += ".meta";
  return p;
}

HyperImage read_image_csv(const std::filesystem::path& path) {
  auto in = open_input(path);
  HyperImage img = read_image_csv(in, path.string());
  const auto meta_path = sidecar_path(path);
  if (!std::filesystem::exists(meta_path)) return img;

  auto meta_in = open_input(meta_path);
  std::size_t rows = 0;
  std::size_t cols = 0;
  for (const auto& kv : parse_key_values(meta_in, meta_path.string())) {
    const auto value = static_cast<std::size_t>(parse_double(kv.value));
    if (kv.key == "rows") rows = value;
    else if (kv.key == "cols") cols = value;
    else if (kv.key == "L") {
      if (value != img.bands()) {
        throw Error(ErrorCode::DimensionMismatch,
                    meta_path.string() + ": L=" + kv.value + " but image has " +
                        std::to_string(img.bands()) + " bands");
      }
    } else {
      parse_fail(meta_path.string(), kv.line, "unknown key '" + kv.key + "'");
    }
  }
  if (rows == 0 || cols == 0) return img;
  RowMatrix pixels = img.pixels();
  return HyperImage(std::move(pixels), rows, cols);
}

void write_image_csv(const std::filesystem::path& path, const HyperImage& img) {
  {
    auto out = open_output(path);
    const auto header = band_header(img.bands());
    write_matrix_csv(out, img.pixels(), header);
  }
  if (img.rows() && img.cols()) {
    auto meta = open_output(sidecar_path(path));
    meta << "rows=" << *img.rows() << "\ncols=" << *img.cols() << "\nL=" << img.bands() << '\n';
  }
}

void write_matrix_csv(std::ostream& out, const Eigen::Ref<const RowMatrix>& values,
                      std::span<const std::string> header) {
  for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
  out << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      out << (c ? "," : "") << format_double(values(r, c));
    }
    out << '\n';
  }
}

void write_abundances_csv(const std::filesystem::path& path, const AbundanceMap& abundances,
                          const SpectralLibrary& lib) {
  std::vector<std::string> header;
  for (const auto& cls : lib.classes()) header.push_back(cls.material);
  auto out = open_output(path);
  write_matrix_csv(out, abundances.values, header);
}

void write_selections_csv(const std::filesystem::path& path, const MesmaResult& result,
                          const SpectralLibrary& lib) {
  auto out = open_output(path);
  const std::size_t p = result.num_classes();
  for (std::size_t k = 0; k < p; ++k) out << (k ? "," : "") << lib[k].material;
  out << '\n';
  const std::size_t n_pixels = p ? result.selections.size() / p : 0;
  for (std::size_t n = 0; n < n_pixels; ++n) {
    for (std::size_t k = 0; k < p; ++k) out << (k ? "," : "") << result.selection(n, k);
    out << '\n';
  }
}

void write_residuals_csv(const std::filesystem::path& path, const Eigen::VectorXd& residuals) {
  auto out = open_output(path);
  out << "residual_sq\n";
  for (Eigen::Index n = 0; n < residuals.size(); ++n) out << format_double(residuals(n)) << '\n';
}

namespace {

nlohmann::json config_to_json(const SynthConfig& cfg) {
  nlohmann::json j;
  j["endmembers"] = cfg.endmembers;
  j["bands"] = cfg.bands;
  j["pixels"] = cfg.pixels;
  j["pool1_size"] = cfg.pool1_size;
  j["pool2_size"] = cfg.pool2_size;
  j["library_subset_size"] = cfg.library_subset_size;
  j["gain"] = {cfg.gain_min, cfg.gain_max};
  j["offset"] = {cfg.offset_min, cfg.offset_max};
  j["dirichlet"] = cfg.dirichlet;
  j["snr_db"] = std::isfinite(cfg.snr_db) ? nlohmann::json(cfg.snr_db) : nlohmann::json(nullptr);
  j["seed"] = cfg.seed;
  return j;
}

SynthConfig config_from_json(const nlohmann::json& j) {
  SynthConfig cfg;
  cfg.endmembers = j.at("endmembers").get<std::size_t>();
  cfg.bands = j.at("bands").get<std::size_t>();
  cfg.pixels = j.at("pixels").get<std::size_t>();
  cfg.pool1_size = j.at("pool1_size").get<std::size_t>();
  cfg.pool2_size = j.at("pool2_size").get<std::size_t>();
  cfg.library_subset_size = j.at("library_subset_size").get<std::size_t>();
  cfg.gain_min = j.at("gain").at(0).get<double>();
  cfg.gain_max = j.at("gain").at(1).get<double>();
  cfg.offset_min = j.at("offset").at(0).get<double>();
  cfg.offset_max = j.at("offset").at(1).get<double>();
  cfg.dirichlet = j.at("dirichlet").get<std::vector<double>>();
  cfg.snr_db = j.at("snr_db").is_null() ? std::numeric_limits<double>::infinity()
                                         : j.at("snr_db").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

RowMatrix read_matrix_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_matrix_csv(in, path.string());
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const SynthDataset& ds, const SynthConfig& cfg) {
  std::filesystem::create_directories(dir);
  write_image_csv(dir / "image.csv", ds.image);
  {
    auto out = open_output(dir / "clean.csv");
    write_matrix_csv(out, ds.clean, band_header(static_cast<std::size_t>(ds.clean.cols())));
  }
  {
    auto out = open_output(dir / "true_abundances.csv");
    std::vector<std::string> header;
    for (const auto& cls : ds.library.classes()) header.push_back(cls.material);
    write_matrix_csv(out, ds.true_abundances.values, header);
  }
  {
    auto out = open_output(dir / "true_selections.csv");
    const std::size_t p = ds.library.num_classes();
    for (std::size_t k = 0; k < p; ++k) out << (k ? "," : "") << ds.library[k].material;
    out << '\n';
    for (std::size_t n = 0; p && n < ds.true_selections.size() / p; ++n) {
      for (std::size_t k = 0; k < p; ++k) out << (k ? "," : "") << ds.true_selections[n * p + k];
      out << '\n';
    }
  }
  write_library_csv(dir / "library.csv", ds.library);
  std::vector<MaterialClass> scene;
  for (std::size_t k = 0; k < ds.scene_pools.size(); ++k) {
    scene.push_back({ds.library.num_classes() > k ? ds.library[k].material : "class_" + std::to_string(k),
                     ds.scene_pools[k]});
  }
  write_library_csv(dir / "scene_pools.csv", SpectralLibrary(std::move(scene)));
  auto manifest = open_output(dir / "manifest.json");
  nlohmann::json j;
  j["format"] = "specaug-dataset";
  j["version"] = 1;
  j["config"] = config_to_json(cfg);
  manifest << j.dump(2) << '\n';
}

LoadedDataset read_dataset(const std::filesystem::path& dir) {
  LoadedDataset out;
  {
    auto in = open_input(dir / "manifest.json");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
      out.config = config_from_json(j.at("config"));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ParseError, (dir / "manifest.json").string() + ": " + e.what());
    }
  }
  auto& ds = out.dataset;
  ds.image = read_image_csv(dir / "image.csv");
  ds.clean = read_matrix_file(dir / "clean.csv");
  ds.true_abundances.values = read_matrix_file(dir / "true_abundances.csv");
  const RowMatrix sel = read_matrix_file(dir / "true_selections.csv");
  ds.true_selections.reserve(static_cast<std::size_t>(sel.size()));
  for (Eigen::Index i = 0; i < sel.size(); ++i) {
    ds.true_selections.push_back(static_cast<std::size_t>(sel.data()[i]));
  }
  ds.library = read_library_csv(dir / "library.csv");
  const SpectralLibrary scene = read_library_csv(dir / "scene_pools.csv");
  for (const auto& cls : scene.classes()) ds.scene_pools.push_back(cls.members);
  return out;
}

}  // namespace specaug::io
