#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <string>

#include "adaptnav/core/config.hpp"
#include "adaptnav/core/vocab.hpp"
#include "adaptnav/world/world.hpp"

namespace adaptnav {

// Frozen image/text embedding pair sharing one space — the retrieval oracle
// the prompt pipeline builds on. Implementations must be pure and
// deterministic for fixed construction parameters.
class DualEncoder {
 public:
  virtual ~DualEncoder() = default;
  virtual int dim() const = 0;
  virtual Eigen::VectorXd encode_image(const ViewImage& view) const = 0;
  virtual Eigen::VectorXd encode_text(const std::string& phrase) const = 0;
  // Provenance string stored with prompt bases and checkpoints; two encoders
  // with equal spec() must produce equal embeddings.
  virtual std::string spec() const = 0;
};

// Synthetic stand-in: object labels map to fixed unit directions; images sum
// their labels' directions plus view noise, text sums its object words'
// directions plus phrase noise. Alignment between the modalities comes from
// sharing the same label geometry.
class MockDualEncoder : public DualEncoder {
 public:
  MockDualEncoder(int dim, uint64_t seed, double image_noise, double text_noise,
                  Vocabularies vocabs);

  int dim() const override { return dim_; }
  Eigen::VectorXd encode_image(const ViewImage& view) const override;
  Eigen::VectorXd encode_text(const std::string& phrase) const override;
  std::string spec() const override;

 private:
  int dim_;
  uint64_t seed_;
  double image_noise_;
  double text_noise_;
  Vocabularies vocabs_;
};

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

// Factory keyed by config `encoder.kind`. "mock" is built in; other kinds
// (e.g. "external") dispatch through the registry so a real-model adapter can
// plug in without touching call sites.
using EncoderFactory = std::function<std::unique_ptr<DualEncoder>(
    const Config&, const Vocabularies&)>;
void register_encoder_factory(const std::string& kind, EncoderFactory factory);
std::unique_ptr<DualEncoder> make_encoder(const Config& cfg,
                                          const Vocabularies& vocabs);

// Agent-side visual projection V = theta_v * raw (the trainable map from raw
// view features to model space); the in-graph version lives with the agent.
Eigen::VectorXd project_view(const Eigen::MatrixXd& theta_v,
                             const Eigen::VectorXd& raw);

}  // namespace adaptnav
