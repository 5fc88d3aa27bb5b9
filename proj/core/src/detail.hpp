#pragma once

#include <cstdint>
#include <vector>

#include "aigt/detectors.hpp"

namespace aigt::detail {

GbdtPayload train_gbdt(const std::vector<FeatureVector>& x, const std::vector<Label>& y,
                       const GbdtConfig& config, uint64_t seed);

double gbdt_raw_score(const GbdtPayload& payload, const FeatureVector& features);

}  // namespace aigt::detail
