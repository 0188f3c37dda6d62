#pragma once

#include <string>
#include <vector>

namespace proxkit {

struct CheckLine {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SuiteResult {
  std::string suite;
  std::vector<CheckLine> lines;
  double seconds = 0.0;

  bool pass() const {
    for (const auto& l : lines)
      if (!l.pass) return false;
    return !lines.empty();
  }
};

struct VerifyOptions {
  std::string mutation;  // "plq_slope_flip" sabotages the axioms suite
  std::string work_dir = "";  // persistence suite scratch space; empty = temp
};

std::vector<std::string> suite_names();
SuiteResult run_suite(const std::string& name, const VerifyOptions& opts = {});
std::vector<SuiteResult> run_all_suites(const VerifyOptions& opts = {});

}  // namespace proxkit
