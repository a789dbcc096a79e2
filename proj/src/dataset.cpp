#include "floatnorm/dataset.hpp"

#include <charconv>
#include <json.hpp>
#include <sstream>

#include "floatnorm/error.hpp"
#include "floatnorm/io_util.hpp"

namespace floatnorm {

using nlohmann::json;

CurveKind curve_kind(Stage stage) { return stage == Stage::kCgg ? CurveKind::kCgg : CurveKind::kId; }

TrainingSample make_sample(Stage stage, std::vector<double> params, std::vector<RangeConstraint> ranges,
                           std::vector<double> scaled_curve, std::optional<double> phig, std::size_t source) {
  const auto specs = stage_parameters(stage);
  if (params.size() != specs.size() || ranges.size() != specs.size())
    throw invalid_input("sample has the wrong number of parameters for stage " + std::string(to_string(stage)));
  if (scaled_curve.size() != curve_length(curve_kind(stage))) throw invalid_input("sample curve has the wrong length");
  if (stage == Stage::kId && !phig) throw invalid_input("Id-stage sample requires PHIG", "PHIG");
  if (stage == Stage::kCgg && phig) throw invalid_input("Cgg-stage sample must not carry a companion PHIG", "PHIG");
  if (phig && !phig_spec().contains(*phig)) throw invalid_input("PHIG outside its global range", "PHIG");

  TrainingSample s;
  s.normalized.resize(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    validate_constraint(specs[i], ranges[i]);
    s.normalized[i] = normalize_floating(params[i], ranges[i], specs[i]);
  }
  s.source = source;
  s.params = std::move(params);
  s.ranges = std::move(ranges);
  s.curve = std::move(scaled_curve);
  s.phig = phig;
  return s;
}

namespace {

std::vector<RangeConstraint> draw_ranges(Stage stage, Scheme scheme, std::span<const double> params, Rng& rng,
                                         const SamplingOptions& options) {
  const auto specs = stage_parameters(stage);
  std::vector<RangeConstraint> ranges;
  ranges.reserve(specs.size());
  // The extra draw is skipped at p_global = 0 so existing datasets stay byte-identical.
  const bool all_global = scheme == Scheme::kFixed || options.force_global_ranges ||
                          (options.p_global > 0.0 && unit_uniform(rng) < options.p_global);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (all_global)
      ranges.push_back(RangeConstraint::global(specs[i]));
    else
      ranges.push_back(sample_local_range(specs[i], params[i], rng, options.p_fixed));
  }
  return ranges;
}

}  // namespace

Dataset build_dataset(Stage stage, Scheme scheme, std::size_t n, std::uint64_t seed, const Simulator& simulator,
                      const SamplingOptions& options) {
  if (n < 1) throw invalid_input("dataset size must be at least 1");
  Dataset ds;
  ds.stage = stage;
  ds.scheme = scheme;
  ds.metadata.seed = seed;
  ds.metadata.n_samples = n;
  ds.metadata.p_fixed = scheme == Scheme::kCustom ? options.p_fixed : 0.0;
  ds.metadata.p_global = scheme == Scheme::kCustom ? options.p_global : 0.0;
  ds.metadata.log_uniform = options.log_uniform;
  ds.samples.reserve(n);

  const auto specs = stage_parameters(stage);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_rng(seed, i);
    std::vector<double> params = sample_params(specs, rng, options.log_uniform);
    std::optional<double> phig;
    if (stage == Stage::kId) phig = uniform(rng, phig_spec().global_min, phig_spec().global_max);
    auto ranges = draw_ranges(stage, scheme, params, rng, options);
    try {
      CurveVector curve = stage == Stage::kCgg ? simulator.simulate_cgg(CggParams::from_array(params))
                                               : simulator.simulate_id(IdParams::from_array(params, *phig));
      ds.samples.push_back(
          make_sample(stage, std::move(params), std::move(ranges), std::move(curve.scaled), phig, i));
    } catch (const Error& e) {
      throw Error(e.kind(), "sample " + std::to_string(i) + ": " + e.what(), e.parameter());
    }
  }
  return ds;
}

Dataset augment_with_ranges(const Dataset& fixed, std::size_t k, std::uint64_t seed, const SamplingOptions& options) {
  if (fixed.scheme != Scheme::kFixed) throw invalid_input("augmentation expects a fixed-scheme dataset");
  if (k < 1) throw invalid_input("augmentation factor k must be at least 1");
  Dataset out;
  out.stage = fixed.stage;
  out.scheme = Scheme::kCustom;
  out.metadata = fixed.metadata;
  out.metadata.origin = "augmented";
  out.metadata.augment_k = k;
  out.metadata.source_seed = fixed.metadata.seed;
  out.metadata.seed = seed;
  out.metadata.p_fixed = options.p_fixed;
  out.metadata.p_global = options.p_global;
  out.metadata.n_samples = fixed.size() * k;
  out.samples.reserve(out.metadata.n_samples);
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    const TrainingSample& base = fixed.samples[i];
    for (std::size_t j = 0; j < k; ++j) {
      Rng rng = make_rng(seed, i * k + j);
      auto ranges = draw_ranges(out.stage, Scheme::kCustom, base.params, rng, options);
      out.samples.push_back(make_sample(out.stage, base.params, std::move(ranges), base.curve, base.phig, base.source));
    }
  }
  return out;
}

std::filesystem::path metadata_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p += ".json";
  return p;
}

std::vector<std::string> dataset_header(Stage stage) {
  std::vector<std::string> cols{"source"};
  const auto specs = stage_parameters(stage);
  for (const auto& s : specs) cols.emplace_back(s.name);
  for (const auto& s : specs) {
    cols.push_back(std::string(s.name) + "_min");
    cols.push_back(std::string(s.name) + "_max");
  }
  if (stage == Stage::kId) cols.emplace_back("PHIG");
  for (std::size_t k = 0; k < curve_length(curve_kind(stage)); ++k) cols.push_back("curve_" + std::to_string(k));
  return cols;
}

namespace {

json metadata_json(const Dataset& ds) {
  const auto& m = ds.metadata;
  json j;
  j["format_version"] = m.format_version;
  j["stage"] = to_string(ds.stage);
  j["scheme"] = to_string(ds.scheme);
  j["seed"] = m.seed;
  j["n_samples"] = m.n_samples;
  j["p_fixed"] = m.p_fixed;
  j["p_global"] = m.p_global;
  j["log_uniform"] = m.log_uniform;
  j["origin"] = m.origin;
  j["augment_k"] = m.augment_k;
  j["source_seed"] = m.source_seed ? json(*m.source_seed) : json(nullptr);
  return j;
}

std::string join(const std::vector<std::string>& cols) {
  std::string line;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) line += ',';
    line += cols[i];
  }
  return line;
}

}  // namespace

std::string dataset_csv(const Dataset& ds) {
  std::string out = join(dataset_header(ds.stage));
  out += '\n';
  for (const auto& s : ds.samples) {
    out += std::to_string(s.source);
    for (double v : s.params) out += ',' + format_double(v);
    for (const auto& r : s.ranges) {
      out += ',' + format_double(r.local_min);
      out += ',' + format_double(r.local_max);
    }
    if (s.phig) out += ',' + format_double(*s.phig);
    for (double v : s.curve) out += ',' + format_double(v);
    out += '\n';
  }
  return out;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  write_file(path, dataset_csv(ds));
  write_file(metadata_path(path), metadata_json(ds).dump(2) + "\n");
}

Dataset read_dataset(const std::filesystem::path& path) {
  Dataset ds;
  json meta;
  try {
    meta = json::parse(read_file(metadata_path(path)));
    const int version = meta.at("format_version").get<int>();
    if (version != kDatasetFormatVersion)
      throw Error(ErrorKind::kVersion, "dataset format version " + std::to_string(version) + " is not supported (expected " +
                                           std::to_string(kDatasetFormatVersion) + ")");
    ds.stage = parse_stage(meta.at("stage").get<std::string>());
    ds.scheme = parse_scheme(meta.at("scheme").get<std::string>());
    auto& m = ds.metadata;
    m.format_version = version;
    m.seed = meta.at("seed").get<std::uint64_t>();
    m.n_samples = meta.at("n_samples").get<std::size_t>();
    m.p_fixed = meta.at("p_fixed").get<double>();
    m.p_global = meta.value("p_global", 0.0);
    m.log_uniform = meta.at("log_uniform").get<bool>();
    m.origin = meta.at("origin").get<std::string>();
    m.augment_k = meta.at("augment_k").get<std::size_t>();
    if (!meta.at("source_seed").is_null()) m.source_seed = meta.at("source_seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw parse_error("malformed dataset metadata " + metadata_path(path).string() + ": " + e.what());
  }

  const std::string text = read_file(path);
  const auto header = dataset_header(ds.stage);
  const auto specs = stage_parameters(ds.stage);
  const std::size_t np = specs.size();
  const std::size_t nc = curve_length(curve_kind(ds.stage));

  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool saw_header = false;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    const bool terminated = eol != std::string::npos;
    if (!terminated) eol = text.size();
    std::string_view line(text.data() + pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!terminated) throw parse_error("unterminated final row (truncated file?)", line_no);
    const auto fields = split_csv_line(line);
    if (!saw_header) {
      if (fields.size() != header.size()) throw parse_error("header has the wrong number of columns", line_no);
      for (std::size_t i = 0; i < header.size(); ++i)
        if (fields[i] != header[i]) throw parse_error("unexpected header column '" + std::string(fields[i]) + "'", line_no);
      saw_header = true;
      continue;
    }
    if (fields.size() != header.size())
      throw parse_error("expected " + std::to_string(header.size()) + " columns, found " + std::to_string(fields.size()),
                        line_no);
    std::size_t source = 0;
    {
      auto [ptr, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), source);
      if (ec != std::errc{} || ptr != fields[0].data() + fields[0].size())
        throw parse_error("bad source index '" + std::string(fields[0]) + "'", line_no);
    }
    std::vector<double> values(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i)
      if (!parse_double(fields[i], values[i - 1]))
        throw parse_error("bad number '" + std::string(fields[i]) + "' in column " + header[i], line_no);
    std::vector<double> params(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(np));
    std::vector<RangeConstraint> ranges(np);
    for (std::size_t i = 0; i < np; ++i) ranges[i] = {values[np + 2 * i], values[np + 2 * i + 1]};
    std::size_t off = 3 * np;
    std::optional<double> phig;
    if (ds.stage == Stage::kId) phig = values[off++];
    std::vector<double> curve(values.begin() + static_cast<std::ptrdiff_t>(off), values.end());
    if (curve.size() != nc) throw parse_error("curve has the wrong length", line_no);
    try {
      ds.samples.push_back(make_sample(ds.stage, std::move(params), std::move(ranges), std::move(curve), phig, source));
    } catch (const Error& e) {
      throw parse_error(e.what(), line_no);
    }
  }
  if (!saw_header) throw parse_error("empty dataset file", 1);
  if (ds.samples.size() != ds.metadata.n_samples)
    throw parse_error("expected " + std::to_string(ds.metadata.n_samples) + " rows, found " +
                          std::to_string(ds.samples.size()) + " (truncated file?)",
                      ds.samples.size() + 2);
  return ds;
}

}  // namespace floatnorm
