#pragma once

#include <cstdint>
#include <string>

#include "proxkit/schedule.hpp"
#include "proxkit/weights.hpp"

namespace proxkit {

// Versioned UTF-8 text checkpoint (`PCKPT 1`): schedule state, RNG seed and
// draw counter, then both weight arrays per group at 17 significant digits.
// Round-trips bit-exactly.
struct Checkpoint {
  int version = 1;
  long step = 0;
  std::uint64_t seed = 0;
  std::uint64_t draw_counter = 0;
  ScheduleState sched;
  WeightGroups w_star;
  WeightGroups w_quant;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

std::string format_g17(double v);

}  // namespace proxkit
