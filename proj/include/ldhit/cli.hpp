#pragma once

#include <string>
#include <vector>

#include "ldhit/config.hpp"
#include "ldhit/simulate.hpp"

namespace ldhit {

// Exit-code contract: 0 ok, 2 config, 3 solver, 4 regime/condition, 5 fit.
int run_cli(int argc, char** argv);
int run_cli(const std::vector<std::string>& args);

std::string format_g17(double x);

void write_simulate_csv(const std::vector<McRun>& runs, std::ostream& out);
std::vector<McRun> read_simulate_csv(const std::string& path);

}  // namespace ldhit
