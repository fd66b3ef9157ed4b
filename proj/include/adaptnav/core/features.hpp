#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace adaptnav {

// Returns v / ||v||. Throws std::invalid_argument when ||v|| is ~0.
Eigen::VectorXd normalize(const Eigen::VectorXd& v);

// Deterministic unit vector for an object label. World raw view features and
// the mock dual encoder both build on this, so "what a label looks like" and
// "what its name means" share one geometry (the way a contrastively trained
// image/text encoder pair aligns the two modalities).
Eigen::VectorXd label_direction(uint64_t label_seed, const std::string& label,
                                int dim);

// Deterministic unit noise vector for a seed.
Eigen::VectorXd unit_noise(uint64_t seed, int dim);

}  // namespace adaptnav
