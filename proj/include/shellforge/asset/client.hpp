#pragma once

#include <optional>
#include <string>
#include <vector>

#include "shellforge/engine/pipeline.hpp"
#include "shellforge/model/model.hpp"

namespace shellforge::asset {

struct Sample {
  std::string var;
  double value = 0;
  double ts = 0;
  bool operator==(const Sample&) const = default;
};

struct SampleSet {
  std::vector<Sample> samples;  // ts non-decreasing
  bool operator==(const SampleSet&) const = default;
};

enum class Aggregation { None, Mean, Min, Max };

Aggregation aggregation_from_name(std::string_view name);

struct QueryFilter {
  std::string var;
  engine::Comparison cmp = engine::Comparison::Gt;
  double literal = 0;
};

// Parameterized query. Samples the generators on the grid
// t_i = from + i*step while t_i <= to (IEEE double arithmetic, in that
// exact expression order), applies the filter per time point, then the
// aggregation per variable.
struct QuerySpec {
  std::vector<std::string> vars;
  double from = 0;
  double to = 0;
  double step = 1;
  std::optional<QueryFilter> filter;
  Aggregation agg = Aggregation::None;
};

// One TCP connection to the simulator's line protocol.
class AssetSession {
public:
  AssetSession() = default;
  ~AssetSession();
  AssetSession(AssetSession&& other) noexcept;
  AssetSession& operator=(AssetSession&& other) noexcept;
  AssetSession(const AssetSession&) = delete;
  AssetSession& operator=(const AssetSession&) = delete;

  // Throws Error{EndpointUnreachable}.
  static AssetSession connect(const std::string& host, int port);

  bool connected() const { return fd_ >= 0; }
  void close();

  // Latest value of a declared variable; one protocol round trip.
  // Throws Error{Disconnected | UnknownVariable}.
  Sample fetch_simple(const std::string& var);

  // Value at an explicit simulated time.
  Sample fetch_at(const std::string& var, double t);

  // Sends a set command (actuators). Throws Error{Disconnected | UnknownVariable}.
  void send_set(const std::string& var, double value);

  // Lvl 2 parameterized query; requires endpoint.parameterized.
  // Throws Error{NotParameterized | InvalidQuery | Disconnected}.
  SampleSet query(const QuerySpec& q, const model::EndpointDescriptor& endpoint);

private:
  std::string round_trip(const std::string& request_line);

  int fd_ = -1;
  std::string buffer_;
};

// Validates a spec against an endpoint. Throws on violation.
void check_query(const QuerySpec& q, const model::EndpointDescriptor& endpoint);

}  // namespace shellforge::asset
