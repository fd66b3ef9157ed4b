#include "adaptnav/encoders/encoders.hpp"

#include <map>
#include <sstream>
#include <stdexcept>

#include "adaptnav/core/features.hpp"
#include "adaptnav/core/rng.hpp"

namespace adaptnav {

MockDualEncoder::MockDualEncoder(int dim, uint64_t seed, double image_noise,
                                 double text_noise, Vocabularies vocabs)
    : dim_(dim),
      seed_(seed),
      image_noise_(image_noise),
      text_noise_(text_noise),
      vocabs_(std::move(vocabs)) {
  if (dim_ < 1) throw std::invalid_argument("encoder: dim must be >= 1");
  vocabs_.validate();
}

Eigen::VectorXd MockDualEncoder::encode_image(const ViewImage& view) const {
  Eigen::VectorXd sum =
      image_noise_ *
      unit_noise(seed_combine(view.noise_seed, seed_, 0x696d67ULL), dim_);
  for (const auto& label : view.labels)
    sum += label_direction(seed_, label, dim_);
  return normalize(sum);
}

Eigen::VectorXd MockDualEncoder::encode_text(const std::string& phrase) const {
  auto tokens = tokenize(phrase);
  if (tokens.empty())
    throw std::invalid_argument("encoder: empty phrase");
  Eigen::VectorXd sum =
      text_noise_ *
      unit_noise(seed_combine(hash_str(phrase), seed_, 0x747874ULL), dim_);
  for (const auto& t : tokens)
    if (vocabs_.is_object(t)) sum += label_direction(seed_, t, dim_);
  return normalize(sum);
}

std::string MockDualEncoder::spec() const {
  std::ostringstream os;
  os << "mock:dim=" << dim_ << ":seed=" << seed_
     << ":image_noise=" << image_noise_ << ":text_noise=" << text_noise_;
  return os.str();
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("cosine: dimension mismatch");
  double na = a.norm(), nb = b.norm();
  if (na < 1e-12 || nb < 1e-12)
    throw std::invalid_argument("cosine: zero vector");
  return a.dot(b) / (na * nb);
}

namespace {
std::map<std::string, EncoderFactory>& registry() {
  static std::map<std::string, EncoderFactory> r;
  return r;
}
}  // namespace

void register_encoder_factory(const std::string& kind, EncoderFactory factory) {
  registry()[kind] = std::move(factory);
}

std::unique_ptr<DualEncoder> make_encoder(const Config& cfg,
                                          const Vocabularies& vocabs) {
  if (cfg.encoder.kind == "mock") {
    return std::make_unique<MockDualEncoder>(
        cfg.encoder.dim, cfg.encoder.seed, cfg.encoder.image_noise,
        cfg.encoder.text_noise, vocabs);
  }
  auto it = registry().find(cfg.encoder.kind);
  if (it == registry().end())
    throw std::invalid_argument(
        "encoder: kind '" + cfg.encoder.kind +
        "' has no registered adapter (register_encoder_factory)");
  return it->second(cfg, vocabs);
}

Eigen::VectorXd project_view(const Eigen::MatrixXd& theta_v,
                             const Eigen::VectorXd& raw) {
  if (theta_v.cols() != raw.size())
    throw std::invalid_argument("project_view: dimension mismatch");
  return theta_v * raw;
}

}  // namespace adaptnav
