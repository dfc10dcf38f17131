#pragma once
// On-disk formats for activation traces and prototype sets.
//
// Trace file (JSONL): line 1 is the header object
//   {format_version, dimension, layer, model_id, dtype, created_utc}
// and each following line is one record
//   {example_id, condition, vector[, prompt_hash]}.
// Records inherit layer and model_id from the header; a record that carries
// its own "layer" or "model_id" key must agree with it.
//
// Numbers are written as the shortest decimal that round-trips at the
// declared dtype, so f32 traces reread bit-exactly.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pds/prototype_set.hpp"
#include "pds/vector_ops.hpp"

namespace pds {

inline constexpr int kTraceFormatVersion = 1;

enum class Condition { cot, neutral, eval_input };

std::string_view to_string(Condition c);
// Throws FormatError for anything outside {cot, neutral, eval_input}.
Condition parse_condition(std::string_view s);

struct TraceHeader {
  int format_version = kTraceFormatVersion;
  std::size_t dimension = 0;
  int layer = 0;
  std::string model_id;
  DType dtype = DType::f32;
  std::string created_utc;

  bool operator==(const TraceHeader&) const = default;
};

struct ActivationRecord {
  std::string example_id;
  Condition condition = Condition::eval_input;
  int layer = 0;
  Vector vector;
  std::string model_id;
  std::string prompt_hash;

  bool operator==(const ActivationRecord&) const = default;
};

struct Trace {
  TraceHeader header;
  std::vector<ActivationRecord> records;
};

// Throws FormatError on a record inconsistent with the header and IoError
// when the path cannot be written.
void write_trace(const TraceHeader& header, std::span<const ActivationRecord> records,
                 const std::filesystem::path& path);
std::string serialize_trace(const TraceHeader& header, std::span<const ActivationRecord> records);

// Throws UnsupportedVersionError, ParseError (with a 1-based line) or IoError.
Trace read_trace(const std::filesystem::path& path);
Trace parse_trace(std::istream& in);

void write_prototypes(const PrototypeSet& set, const std::filesystem::path& path);
std::string serialize_prototypes(const PrototypeSet& set);

// When source_diffs is nonempty the weighted-centroid identity is checked
// against it and a FormatError is raised on violation.
PrototypeSet read_prototypes(const std::filesystem::path& path,
                             std::span<const Vector> source_diffs = {});
PrototypeSet parse_prototypes(std::string_view text, std::span<const Vector> source_diffs = {});

// ISO-8601 UTC, second resolution.
std::string utc_timestamp_now();

// Shortest round-trip decimal for v stored at dtype.
void append_number(std::string& out, double v, DType dtype);

}  // namespace pds
