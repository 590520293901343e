#pragma once

#include "gradflow/experiment.hpp"

#include <json.hpp>

#include <iosfwd>
#include <stdexcept>
#include <string>

namespace gradflow::cli {

// Bad or missing configuration; maps to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const char* version();

nlohmann::ordered_json read_config(const std::string& path);
ExperimentConfig experiment_config(const nlohmann::ordered_json& j);

// 0 ok, 1 runtime failure, 2 usage or configuration error.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gradflow::cli
