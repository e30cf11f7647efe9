#pragma once

#include <iosfwd>
#include <string>

#include "scoba/core.hpp"

namespace scoba {

// Plain-text instance files. One directive per line, '#' starts a comment:
//
//   horizon 12
//   agent 0
//   task 3 penalty 1 downtime 2
//   window 0 3 2 7                      # agent task lower upper
//   completion 0 3 geometric 0.75       # or: epanechnikov mu r | table v1 v2 ...
//
// Windows and completion models come in matched pairs per (agent, task).

ProblemInstance read_instance(std::istream& in);
ProblemInstance read_instance_file(const std::string& path);

void write_instance(std::ostream& out, const ProblemInstance& instance);
void write_instance_file(const std::string& path, const ProblemInstance& instance);

}  // namespace scoba
