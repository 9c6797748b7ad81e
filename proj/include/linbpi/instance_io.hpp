#pragma once

#include <string>

#include "linbpi/mdp.hpp"

namespace linbpi {

// On-disk schema (JSON object):
//   d, S, A        integers
//   mode           "discounted" | "episodic"
//   gamma          (discounted)        H  (episodic)
//   phi            [S][A][d]
//   theta          [d]                 or [H][d]
//   mu             [S][d] (row = mu(s')) or [H][S][d]
// Loading re-runs full model validation; errors name the violated bound and
// the offending index.
Instance load_instance(const std::string& path);
Instance parse_instance(const std::string& json_text);
void save_instance(const Instance& inst, const std::string& path);
std::string instance_to_json(const Instance& inst);

bool is_episodic(const Instance& inst);
const FeatureMap& features_of(const Instance& inst);

}  // namespace linbpi
