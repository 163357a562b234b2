#pragma once

// JSON mapping for parameter records and experiment configs. Parsing is
// strict: unknown keys and wrong types raise ConfigError naming the field,
// so a typo never silently falls back to a default.

#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "auctionflow/experiment.hpp"
#include "auctionflow/landscape.hpp"
#include "auctionflow/point_process.hpp"
#include "auctionflow/poisson_diagnostics.hpp"

namespace auctionflow {

using Json = nlohmann::ordered_json;

/// Parses JSON text; syntax errors report line and column.
Json parse_json_text(const std::string& text, const std::string& source_name);
/// Reads and parses a file; a missing or unreadable file is a ConfigError.
Json load_json_file(const std::string& path);

/// Strict object reader used by every from_json below.
class FieldReader {
 public:
  FieldReader(const Json& object, std::string context);

  /// Reads `key` into `out` when present; leaves the default otherwise.
  template <class T>
  void get(const char* key, T& out) {
    if (has(key)) convert(key, raw(key), out);
  }
  template <class T>
  void require(const char* key, T& out) {
    if (!has(key)) throw_missing(key);
    convert(key, raw(key), out);
  }
  bool has(const char* key) const;
  const Json& raw(const char* key);
  const std::string& context() const noexcept { return context_; }
  /// Throws if the object holds keys that were never read.
  void finish() const;

 private:
  template <class T>
  void convert(const char* key, const Json& value, T& out) const {
    if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!value.is_number_integer()) throw_type(key, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (value.is_number_unsigned() == false && value.get<long long>() < 0) {
          throw_type(key, "expected a nonnegative integer");
        }
      }
    }
    try {
      out = value.get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw_type(key, e.what());
    }
  }
  [[noreturn]] void throw_missing(const char* key) const;
  [[noreturn]] void throw_type(const char* key, const char* detail) const;

  const Json& object_;
  std::string context_;
  std::vector<std::string> seen_;
};

ExperimentKind parse_experiment_kind(const std::string& name);
std::string to_string(ExperimentKind kind);
GammaReading parse_gamma_reading(const std::string& name);
std::string to_string(GammaReading reading);

ExperimentConfig experiment_config_from_json(const Json& j);
Json to_json(const ExperimentConfig& config);

UserProcessSpec user_spec_from_json(const Json& j);
Json to_json(const UserProcessSpec& spec);

TimeInterval interval_from_json(const Json& j);
Json to_json(const TimeInterval& interval);

SncpParams sncp_from_json(const Json& j);
Json to_json(const SncpParams& params);

LgcpParams lgcp_from_json(const Json& j);
Json to_json(const LgcpParams& params);

ExpMarketOpportunity exp_opportunity_from_json(const Json& j);
Json to_json(const ExpMarketOpportunity& opp);

TvBoundInputs tv_inputs_from_json(const Json& j);
Json to_json(const TvBoundInputs& inputs);

PoissonCheckParams poisson_params_from_json(const Json& j);
Json to_json(const PoissonCheckParams& params);

Json to_json(const DiscreteLandscape& landscape);
Json to_json(const ExpLandscape& landscape);

}  // namespace auctionflow
