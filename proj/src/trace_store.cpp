#include "pds/trace_store.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "pds/errors.hpp"

namespace pds {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::cot:
      return "cot";
    case Condition::neutral:
      return "neutral";
    case Condition::eval_input:
      return "eval_input";
  }
  return "?";
}

Condition parse_condition(std::string_view s) {
  if (s == "cot") return Condition::cot;
  if (s == "neutral") return Condition::neutral;
  if (s == "eval_input") return Condition::eval_input;
  throw FormatError("unknown condition '" + std::string(s) + "'");
}

std::string_view to_string(DType t) { return t == DType::f32 ? "f32" : "f64"; }

DType parse_dtype(std::string_view s) {
  if (s == "f32") return DType::f32;
  if (s == "f64") return DType::f64;
  throw FormatError("unknown dtype '" + std::string(s) + "'");
}

Vector quantize(VectorView v, DType dtype) {
  Vector out(v.begin(), v.end());
  if (dtype == DType::f32) {
    for (double& x : out) {
      x = static_cast<double>(static_cast<float>(x));
    }
  }
  return out;
}

std::size_t PrototypeSet::total_n() const {
  return std::accumulate(cluster_sizes.begin(), cluster_sizes.end(), std::size_t{0});
}

Vector weighted_centroid(const PrototypeSet& set) {
  if (set.k() == 0 || set.cluster_sizes.size() != set.k()) {
    throw DataError("weighted centroid needs k >= 1 prototypes with matching cluster sizes");
  }
  Vector acc(set.dimension(), 0.0);
  for (std::size_t j = 0; j < set.k(); ++j) {
    axpy(static_cast<double>(set.cluster_sizes[j]), set.prototypes[j], acc);
  }
  const double n = static_cast<double>(set.total_n());
  for (double& x : acc) {
    x /= n;
  }
  return acc;
}

double weighted_centroid_residual(const PrototypeSet& set, std::span<const Vector> diffs) {
  const Vector wc = weighted_centroid(set);
  const Vector m = mean_of(diffs);
  double mean_norm = 0.0;
  for (const Vector& d : diffs) {
    mean_norm += norm(d);
  }
  mean_norm /= static_cast<double>(diffs.size());
  const double scale = std::max(norm(m), 1e-6 * mean_norm);
  const double err = std::sqrt(squared_distance(wc, m));
  if (scale == 0.0) {
    return err == 0.0 ? 0.0 : INFINITY;
  }
  return err / scale;
}

void append_number(std::string& out, double v, DType dtype) {
  if (!std::isfinite(v)) {
    throw FormatError("non-finite value cannot be encoded");
  }
  if (v == 0.0 && std::signbit(v)) {
    // A bare "-0" parses back as integer zero.
    out += "-0.0";
    return;
  }
  char buf[64];
  std::to_chars_result r{};
  if (dtype == DType::f32) {
    r = std::to_chars(buf, buf + sizeof(buf), static_cast<float>(v));
  } else {
    r = std::to_chars(buf, buf + sizeof(buf), v);
  }
  out.append(buf, r.ptr);
}

namespace {

void append_vector(std::string& out, VectorView v, DType dtype) {
  out.push_back('[');
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i != 0) out.push_back(',');
    append_number(out, v[i], dtype);
  }
  out.push_back(']');
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) {
    throw IoError("write to '" + path.string() + "' failed");
  }
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void validate_record(const TraceHeader& header, const ActivationRecord& r, std::size_t index) {
  const std::string where = "record " + std::to_string(index) + " ('" + r.example_id + "')";
  if (r.vector.size() != header.dimension) {
    throw FormatError(where + ": vector length " + std::to_string(r.vector.size()) +
                      " does not match header dimension " + std::to_string(header.dimension));
  }
  if (r.layer != header.layer) {
    throw FormatError(where + ": layer " + std::to_string(r.layer) +
                      " does not match header layer " + std::to_string(header.layer));
  }
  if (!r.model_id.empty() && r.model_id != header.model_id) {
    throw FormatError(where + ": model_id '" + r.model_id + "' does not match header");
  }
}

void validate_header(const TraceHeader& h) {
  if (h.format_version != kTraceFormatVersion) {
    throw UnsupportedVersionError(h.format_version);
  }
  if (h.dimension < 1) {
    throw FormatError("header dimension must be >= 1");
  }
}

std::vector<double> parse_number_array(const json& arr, const char* key) {
  if (!arr.is_array()) {
    throw FormatError(std::string("'") + key + "' must be an array");
  }
  std::vector<double> out;
  out.reserve(arr.size());
  for (const json& v : arr) {
    if (!v.is_number()) {
      throw FormatError(std::string("'") + key + "' must contain only numbers");
    }
    out.push_back(v.get<double>());
  }
  return out;
}

const json& require_key(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw FormatError(std::string("missing key '") + key + "'");
  }
  return *it;
}

template <typename T>
T get_as(const json& obj, const char* key) {
  const json& v = require_key(obj, key);
  try {
    return v.get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string("key '") + key + "' has the wrong type");
  }
}

TraceHeader parse_header(const json& obj) {
  if (!obj.is_object()) {
    throw FormatError("header must be a JSON object");
  }
  TraceHeader h;
  h.format_version = get_as<int>(obj, "format_version");
  if (h.format_version != kTraceFormatVersion) {
    throw UnsupportedVersionError(h.format_version);
  }
  const auto dim = get_as<long long>(obj, "dimension");
  if (dim < 1) {
    throw FormatError("header dimension must be >= 1");
  }
  h.dimension = static_cast<std::size_t>(dim);
  h.layer = get_as<int>(obj, "layer");
  h.model_id = get_as<std::string>(obj, "model_id");
  h.dtype = parse_dtype(get_as<std::string>(obj, "dtype"));
  h.created_utc = get_as<std::string>(obj, "created_utc");
  return h;
}

ActivationRecord parse_record(const json& obj, const TraceHeader& h) {
  if (!obj.is_object()) {
    throw FormatError("record must be a JSON object");
  }
  ActivationRecord r;
  r.example_id = get_as<std::string>(obj, "example_id");
  r.condition = parse_condition(get_as<std::string>(obj, "condition"));
  r.vector = quantize(parse_number_array(require_key(obj, "vector"), "vector"), h.dtype);
  if (r.vector.size() != h.dimension) {
    throw FormatError("vector has " + std::to_string(r.vector.size()) +
                      " elements but header dimension is " + std::to_string(h.dimension));
  }
  r.layer = h.layer;
  if (obj.contains("layer") && get_as<int>(obj, "layer") != h.layer) {
    throw FormatError("record layer " + std::to_string(get_as<int>(obj, "layer")) +
                      " differs from header layer " + std::to_string(h.layer));
  }
  r.model_id = h.model_id;
  if (obj.contains("model_id") && get_as<std::string>(obj, "model_id") != h.model_id) {
    throw FormatError("record model_id differs from header");
  }
  if (obj.contains("prompt_hash")) {
    r.prompt_hash = get_as<std::string>(obj, "prompt_hash");
  }
  return r;
}

}  // namespace

std::string serialize_trace(const TraceHeader& header, std::span<const ActivationRecord> records) {
  validate_header(header);
  ordered_json h;
  h["format_version"] = header.format_version;
  h["dimension"] = header.dimension;
  h["layer"] = header.layer;
  h["model_id"] = header.model_id;
  h["dtype"] = to_string(header.dtype);
  h["created_utc"] = header.created_utc;
  std::string out = h.dump();
  out.push_back('\n');
  for (std::size_t i = 0; i < records.size(); ++i) {
    const ActivationRecord& r = records[i];
    validate_record(header, r, i);
    out += "{\"example_id\":";
    out += json(r.example_id).dump();
    out += ",\"condition\":\"";
    out += to_string(r.condition);
    out += "\",\"vector\":";
    append_vector(out, r.vector, header.dtype);
    if (!r.prompt_hash.empty()) {
      out += ",\"prompt_hash\":";
      out += json(r.prompt_hash).dump();
    }
    out += "}\n";
  }
  return out;
}

void write_trace(const TraceHeader& header, std::span<const ActivationRecord> records,
                 const std::filesystem::path& path) {
  write_text(path, serialize_trace(header, records));
}

Trace parse_trace(std::istream& in) {
  Trace trace;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      continue;
    }
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
    }
    try {
      if (!have_header) {
        if (line_no != 1) {
          throw FormatError("header must be on line 1");
        }
        trace.header = parse_header(obj);
        have_header = true;
      } else {
        trace.records.push_back(parse_record(obj, trace.header));
      }
    } catch (const UnsupportedVersionError&) {
      throw;
    } catch (const ParseError&) {
      throw;
    } catch (const FormatError& e) {
      throw ParseError(line_no, e.what());
    }
  }
  if (!have_header) {
    throw ParseError(1, "missing header line");
  }
  return trace;
}

Trace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open '" + path.string() + "' for reading");
  }
  return parse_trace(in);
}

namespace {

ordered_json params_to_json(const DiscoveryParams& p) {
  ordered_json j;
  j["seed"] = p.seed;
  j["max_iters"] = p.max_iters;
  j["tol"] = p.tol;
  j["restarts"] = p.restarts;
  if (p.k_selection) {
    const KSelectionRecord& ks = *p.k_selection;
    ordered_json s;
    s["candidate_ks"] = ks.candidate_ks;
    s["wcss_curve"] = ks.wcss_curve;
    s["chosen_k"] = ks.chosen_k;
    s["method"] = ks.method;
    s["warnings"] = ks.warnings;
    j["k_selection"] = s;
  } else {
    j["k_selection"] = nullptr;
  }
  return j;
}

DiscoveryParams params_from_json(const json& j) {
  if (!j.is_object()) {
    throw FormatError("'discovery_params' must be an object");
  }
  DiscoveryParams p;
  p.seed = get_as<std::uint64_t>(j, "seed");
  p.max_iters = get_as<int>(j, "max_iters");
  p.tol = get_as<double>(j, "tol");
  p.restarts = get_as<int>(j, "restarts");
  if (auto it = j.find("k_selection"); it != j.end() && !it->is_null()) {
    KSelectionRecord ks;
    ks.candidate_ks = get_as<std::vector<int>>(*it, "candidate_ks");
    ks.wcss_curve = get_as<std::vector<double>>(*it, "wcss_curve");
    ks.chosen_k = get_as<int>(*it, "chosen_k");
    ks.method = get_as<std::string>(*it, "method");
    if (it->contains("warnings")) {
      ks.warnings = get_as<std::vector<std::string>>(*it, "warnings");
    }
    if (ks.candidate_ks.size() != ks.wcss_curve.size()) {
      throw FormatError("k_selection: candidate_ks and wcss_curve lengths differ");
    }
    p.k_selection = std::move(ks);
  }
  return p;
}

}  // namespace

std::string serialize_prototypes(const PrototypeSet& set) {
  if (set.k() == 0) {
    throw FormatError("prototype set must contain at least one prototype");
  }
  if (set.cluster_sizes.size() != set.k()) {
    throw FormatError("cluster_sizes length does not match k");
  }
  const std::size_t d = set.dimension();
  std::string out = "{\n";
  out += "  \"format_version\": " + std::to_string(kTraceFormatVersion) + ",\n";
  out += "  \"dimension\": " + std::to_string(d) + ",\n";
  out += "  \"layer\": " + std::to_string(set.layer) + ",\n";
  out += "  \"k\": " + std::to_string(set.k()) + ",\n";
  out += "  \"total_n\": " + std::to_string(set.total_n()) + ",\n";
  out += "  \"dtype\": \"" + std::string(to_string(set.dtype)) + "\",\n";
  out += "  \"prototypes\": [\n";
  for (std::size_t j = 0; j < set.k(); ++j) {
    if (set.prototypes[j].size() != d) {
      throw FormatError("prototype " + std::to_string(j) + " has inconsistent dimension");
    }
    out += "    ";
    append_vector(out, set.prototypes[j], set.dtype);
    out += j + 1 < set.k() ? ",\n" : "\n";
  }
  out += "  ],\n";
  out += "  \"cluster_sizes\": " + json(set.cluster_sizes).dump() + ",\n";
  out += "  \"discovery_params\": " + params_to_json(set.discovery_params).dump() + ",\n";
  out += "  \"source_trace_hash\": " + json(set.source_trace_hash).dump() + "\n";
  out += "}\n";
  return out;
}

void write_prototypes(const PrototypeSet& set, const std::filesystem::path& path) {
  write_text(path, serialize_prototypes(set));
}

PrototypeSet parse_prototypes(std::string_view text, std::span<const Vector> source_diffs) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed prototype file: ") + e.what());
  }
  if (!obj.is_object()) {
    throw FormatError("prototype file must hold a JSON object");
  }
  const int version = get_as<int>(obj, "format_version");
  if (version != kTraceFormatVersion) {
    throw UnsupportedVersionError(version);
  }
  const auto dimension = get_as<long long>(obj, "dimension");
  const auto k = get_as<long long>(obj, "k");
  const auto total_n = get_as<long long>(obj, "total_n");
  if (dimension < 1) {
    throw FormatError("dimension must be >= 1");
  }
  if (k < 1) {
    throw FormatError("k must be >= 1");
  }

  PrototypeSet set;
  set.layer = get_as<int>(obj, "layer");
  set.dtype = obj.contains("dtype") ? parse_dtype(get_as<std::string>(obj, "dtype")) : DType::f64;
  const json& protos = require_key(obj, "prototypes");
  if (!protos.is_array() || protos.size() != static_cast<std::size_t>(k)) {
    throw FormatError("'prototypes' must be an array of k vectors");
  }
  for (const json& p : protos) {
    Vector v = quantize(parse_number_array(p, "prototypes"), set.dtype);
    if (v.size() != static_cast<std::size_t>(dimension)) {
      throw FormatError("prototype " + std::to_string(set.prototypes.size()) + " has " +
                        std::to_string(v.size()) + " elements, expected " +
                        std::to_string(dimension));
    }
    set.prototypes.push_back(std::move(v));
  }
  const json& sizes = require_key(obj, "cluster_sizes");
  if (!sizes.is_array() || sizes.size() != static_cast<std::size_t>(k)) {
    throw FormatError("'cluster_sizes' must hold k entries");
  }
  for (const json& s : sizes) {
    if (!s.is_number_unsigned() || s.get<std::size_t>() == 0) {
      throw FormatError("cluster sizes must be positive integers");
    }
    set.cluster_sizes.push_back(s.get<std::size_t>());
  }
  if (set.total_n() != static_cast<std::size_t>(total_n)) {
    throw FormatError("total_n does not equal the sum of cluster_sizes");
  }
  set.discovery_params = params_from_json(require_key(obj, "discovery_params"));
  set.source_trace_hash = get_as<std::string>(obj, "source_trace_hash");

  if (!source_diffs.empty()) {
    for (const Vector& d : source_diffs) {
      if (d.size() != set.dimension()) {
        throw FormatError("source difference set dimension does not match prototypes");
      }
    }
    const double residual = weighted_centroid_residual(set, source_diffs);
    if (!(residual <= kWeightedCentroidTolerance)) {
      throw FormatError("weighted centroid identity violated against source set (residual " +
                        std::to_string(residual) + ")");
    }
  }
  return set;
}

PrototypeSet read_prototypes(const std::filesystem::path& path, std::span<const Vector> source_diffs) {
  return parse_prototypes(read_text(path), source_diffs);
}

std::string utc_timestamp_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace pds
