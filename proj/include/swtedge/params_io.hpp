#pragma once

#include <string>

#include "swtedge/edge_pipeline.hpp"

namespace swtedge {

// Flat text serialization of trained parameters, one `key=value` per line,
// LF-terminated, doubles printed with 17 significant digits so a
// save/load round-trip is bit-exact.
//
//   format=swtedge-params-v1
//   model=hmc|hmt
//   scales=<J>
//   orientations=LH,HL[,HH]
// then per orientation, for hmc (scale j = 1..J, 1 = finest):
//   chain.<ORIENT>.<j>.initial=<p0>,<p1>
//   chain.<ORIENT>.<j>.transition=<a00>,<a01>,<a10>,<a11>
//   chain.<ORIENT>.<j>.sigma0=<v>
//   chain.<ORIENT>.<j>.b1=<v>
// or for hmt (depth 0 = coarsest scale):
//   tree.<ORIENT>.root_prior=<p0>,<p1>
//   tree.<ORIENT>.transition.<d>=<e00>,<e01>,<e10>,<e11>   d = 1..J-1
//   tree.<ORIENT>.emission.<k>=<sigma0>,<b1>               k = 0..J-1
//
// Lines starting with '#' and blank lines are ignored on input. Training
// bookkeeping (iteration counts, flags) is not part of the model and is
// not serialized.
std::string serialize_params(const TrainedModel& model);

// Inverse of serialize_params. Malformed input (unknown format tag,
// missing or duplicate keys, bad numbers, invalid distributions) raises
// std::runtime_error naming the offending key.
TrainedModel parse_params(const std::string& text);

void save_params(const std::string& path, const TrainedModel& model);
TrainedModel load_params(const std::string& path);

}  // namespace swtedge
