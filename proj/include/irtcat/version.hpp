#pragma once

namespace irtcat {

constexpr const char* kToolVersion = "1.0.0";
// stamped into bank files, session logs and reports
constexpr const char* kSchemaVersion = "1";

}  // namespace irtcat
