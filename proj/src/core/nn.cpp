#include "lsp/core/nn.hpp"

#include <cmath>

namespace lsp {

Linear::Linear(std::string name, std::size_t in, std::size_t out, Rng& rng, bool zero_init) {
  weight = {name + ".weight", Tensor(Shape{in, out}, 0.0)};
  bias = {name + ".bias", Tensor(Shape{out}, 0.0)};
  if (zero_init) return;
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  for (double& w : weight.value.values()) w = rng.uniform(-bound, bound);
  for (double& b : bias.value.values()) b = rng.uniform(-bound, bound);
}

Var Linear::forward(Tape& tape, const Var& x, bool trainable) const {
  Var w = tape.param(weight, trainable);
  Var b = tape.param(bias, trainable);
  return ad::add(ad::matmul(x, w), b);
}

Mlp::Mlp(std::string name, const std::vector<std::size_t>& sizes, Rng& rng, bool zero_output) {
  if (sizes.size() < 2) throw std::invalid_argument("Mlp needs at least input and output sizes");
  for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
    const bool last = i + 2 == sizes.size();
    layers_.emplace_back(name + ".l" + std::to_string(i), sizes[i], sizes[i + 1], rng,
                         last && zero_output);
  }
}

Var Mlp::forward(Tape& tape, const Var& x, bool trainable) const {
  Var h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i].forward(tape, h, trainable);
    if (i + 1 < layers_.size()) h = ad::relu(h);
  }
  return h;
}

Tensor Mlp::evaluate(const Tensor& x) const {
  Tape tape;
  return forward(tape, tape.constant(x), false).value();
}

std::vector<Parameter*> Mlp::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Parameter*> Mlp::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

}  // namespace lsp

#include <openssl/evp.h>

#include <iomanip>
#include <memory>
#include <sstream>

namespace lsp {

std::string parameter_digest(const std::vector<const Parameter*>& params) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  for (const Parameter* p : params) {
    EVP_DigestUpdate(ctx.get(), p->name.data(), p->name.size());
    for (std::size_t d : p->value.shape()) {
      const std::uint64_t dim = d;
      EVP_DigestUpdate(ctx.get(), &dim, sizeof dim);
    }
    EVP_DigestUpdate(ctx.get(), p->value.data(), p->value.size() * sizeof(double));
  }
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), out, &len);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(out[i]);
  return os.str();
}

}  // namespace lsp
