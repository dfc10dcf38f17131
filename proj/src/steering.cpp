#include "pds/steering.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pds/errors.hpp"

namespace pds {

std::string_view to_string(Policy p) {
  switch (p) {
    case Policy::sum_projections:
      return "sum_projections";
    case Policy::top1_projection:
      return "top1_projection";
    case Policy::dom_additive:
      return "dom_additive";
  }
  return "?";
}

Policy parse_policy(std::string_view s) {
  if (s == "pds" || s == "sum_projections") return Policy::sum_projections;
  if (s == "top1" || s == "top1_projection") return Policy::top1_projection;
  if (s == "dom" || s == "dom_additive") return Policy::dom_additive;
  throw UsageError("unknown steering policy '" + std::string(s) + "' (expected pds, top1 or dom)");
}

std::string_view to_string(PromptType p) {
  switch (p) {
    case PromptType::neutral:
      return "neutral";
    case PromptType::cot:
      return "cot";
    case PromptType::anti_cot:
      return "anti_cot";
  }
  return "?";
}

PromptType parse_prompt_type(std::string_view s) {
  if (s == "neutral") return PromptType::neutral;
  if (s == "cot") return PromptType::cot;
  if (s == "anti_cot" || s == "anti-cot") return PromptType::anti_cot;
  throw UsageError("unknown prompt type '" + std::string(s) + "' (expected neutral, cot or anti_cot)");
}

double projection_coefficient(VectorView h, VectorView mu) {
  if (h.size() != mu.size()) {
    throw DimensionError(mu.size(), h.size(), "projection input");
  }
  const double mm = squared_norm(mu);
  if (mm == 0.0) {
    throw DataError("projection onto a zero vector");
  }
  return dot(h, mu) / mm;
}

Vector project(VectorView h, VectorView mu) { return scaled(mu, projection_coefficient(h, mu)); }

SteeringResult steering_vector(VectorView h, const PrototypeSet& prototypes, Policy policy) {
  if (prototypes.k() == 0) {
    throw DataError("steering with an empty prototype set");
  }
  for (std::size_t j = 0; j < prototypes.k(); ++j) {
    if (prototypes.prototypes[j].size() != h.size()) {
      throw DimensionError(h.size(), prototypes.prototypes[j].size(),
                           "prototype " + std::to_string(j));
    }
    if (squared_norm(prototypes.prototypes[j]) == 0.0) {
      throw DataError("prototype " + std::to_string(j) + " has zero norm");
    }
  }

  SteeringResult out;
  out.diagnostics.policy = policy;
  out.diagnostics.input_norm = norm(h);
  Vector& v = out.vector;
  v.assign(h.size(), 0.0);

  switch (policy) {
    case Policy::sum_projections: {
      for (const Vector& mu : prototypes.prototypes) {
        const double c = projection_coefficient(h, mu);
        out.diagnostics.coefficients.push_back(c);
        axpy(c, mu, v);
      }
      break;
    }
    case Policy::top1_projection: {
      std::size_t best = 0;
      double best_cos = -1.0;
      const double hn = out.diagnostics.input_norm;
      for (std::size_t j = 0; j < prototypes.k(); ++j) {
        const Vector& mu = prototypes.prototypes[j];
        out.diagnostics.coefficients.push_back(projection_coefficient(h, mu));
        const double c = hn == 0.0 ? 0.0 : std::abs(dot(h, mu)) / (hn * norm(mu));
        if (c > best_cos) {
          best_cos = c;
          best = j;
        }
      }
      out.diagnostics.selected = best;
      axpy(out.diagnostics.coefficients[best], prototypes.prototypes[best], v);
      break;
    }
    case Policy::dom_additive:
      v = weighted_centroid(prototypes);
      break;
  }
  out.diagnostics.steer_norm = norm(v);
  return out;
}

Vector apply_steering(VectorView h, VectorView v, double alpha) {
  if (h.size() != v.size()) {
    throw DimensionError(h.size(), v.size(), "steering vector");
  }
  Vector out(h.begin(), h.end());
  if (alpha == 0.0) {
    return out;
  }
  axpy(alpha, v, out);
  return out;
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

ConfigTable ConfigTable::defaults() {
  ConfigTable t;
  t.set("GSM8K", PromptType::neutral, 16, 1.0);
  t.set("GSM8K", PromptType::cot, 16, 1.0);
  t.set("GSM8K", PromptType::anti_cot, 16, 10.0);
  t.set("AQuA-RAT", PromptType::neutral, 16, 7.0);
  t.set("AQuA-RAT", PromptType::cot, 16, 1.0);
  t.set("AQuA-RAT", PromptType::anti_cot, 16, 10.0);
  t.set("BIG-Bench", PromptType::neutral, 15, 1.0);
  t.set("BIG-Bench", PromptType::cot, 15, 1.0);
  t.set("BIG-Bench", PromptType::anti_cot, 15, 1.0);
  return t;
}

ConfigTable::Entry& ConfigTable::entry(std::string_view dataset) {
  auto [it, inserted] = entries_.try_emplace(lower(dataset));
  if (inserted) {
    it->second.display_name = std::string(dataset);
  }
  return it->second;
}

void ConfigTable::set(std::string_view dataset, PromptType prompt, int layer, double alpha) {
  if (alpha < 0.0) {
    throw UsageError("steering strength must be >= 0");
  }
  Row& row = entry(dataset).rows[prompt];
  row.layer = layer;
  row.alpha = alpha;
}

void ConfigTable::apply_overrides(std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    auto fail = [&](const std::string& why) {
      throw UsageError("config line " + std::to_string(line_no) + ": " + why);
    };
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected key=value");
    const std::string_view key = trim(line.substr(0, eq));
    const std::string value(trim(line.substr(eq + 1)));
    const std::size_t d2 = key.rfind('.');
    if (d2 == std::string_view::npos || d2 == 0) fail("key must be <dataset>.<prompt_type>.<field>");
    const std::size_t d1 = key.rfind('.', d2 - 1);
    if (d1 == std::string_view::npos || d1 == 0) fail("key must be <dataset>.<prompt_type>.<field>");
    const std::string_view dataset = key.substr(0, d1);
    const PromptType prompt = parse_prompt_type(key.substr(d1 + 1, d2 - d1 - 1));
    const std::string_view field = key.substr(d2 + 1);

    Row& row = entry(dataset).rows[prompt];
    try {
      std::size_t used = 0;
      if (field == "layer") {
        const int layer = std::stoi(value, &used);
        if (used != value.size()) fail("layer must be an integer");
        row.layer = layer;
      } else if (field == "alpha") {
        const double alpha = std::stod(value, &used);
        if (used != value.size() || !(alpha >= 0.0)) fail("alpha must be a non-negative number");
        row.alpha = alpha;
      } else {
        fail("unknown field '" + std::string(field) + "' (expected layer or alpha)");
      }
    } catch (const std::logic_error&) {
      fail("cannot parse value '" + value + "'");
    }
  }
}

void ConfigTable::apply_overrides_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open config '" + path.string() + "'");
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  apply_overrides(buf.str());
}

std::vector<std::string> ConfigTable::datasets() const {
  std::vector<std::string> out;
  for (const auto& [key, e] : entries_) {
    out.push_back(e.display_name);
  }
  return out;
}

SteeringConfig ConfigTable::lookup(std::string_view dataset, PromptType prompt) const {
  auto known = [&] {
    std::string s;
    for (const std::string& name : datasets()) {
      s += s.empty() ? name : ", " + name;
    }
    return s;
  };
  const auto it = entries_.find(lower(dataset));
  if (it == entries_.end()) {
    throw DataError("unknown dataset '" + std::string(dataset) + "'; known: " + known());
  }
  const auto row = it->second.rows.find(prompt);
  if (row == it->second.rows.end() || !row->second.layer || !row->second.alpha) {
    throw DataError("dataset '" + std::string(dataset) + "' has no complete " +
                    std::string(to_string(prompt)) + " row (need layer and alpha); known: " + known());
  }
  SteeringConfig cfg;
  cfg.layer = *row->second.layer;
  cfg.alpha = *row->second.alpha;
  return cfg;
}

SteeringConfig config_lookup(std::string_view dataset, PromptType prompt, const ConfigTable& table) {
  return table.lookup(dataset, prompt);
}

}  // namespace pds
