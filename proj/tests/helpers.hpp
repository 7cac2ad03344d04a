#pragma once

#include <string>

#include "ciex/schema.hpp"

namespace ciex::testing {

inline std::string data_path(const std::string& name) {
  return std::string(CIEX_TEST_DATA_DIR) + "/" + name;
}

inline std::string golden_path(const std::string& name) {
  return std::string(CIEX_GOLDEN_DIR) + "/" + name;
}

inline Schema toy_schema() { return load_schema_file(data_path("toy_schema.json")); }

}  // namespace ciex::testing
