#include "fdan/optim.hpp"

#include <cmath>

namespace fdan {

Adam::Adam(const ParamStore& ps) {
  m_.reserve(static_cast<std::size_t>(ps.size()));
  v_.reserve(static_cast<std::size_t>(ps.size()));
  for (const auto& p : ps) {
    m_.emplace_back(p.value.shape());
    v_.emplace_back(p.value.shape());
  }
}

void Adam::step(ParamStore& ps, float lr) {
  if (ps.size() != static_cast<int>(m_.size()))
    throw InternalError("adam: store size changed since construction");
  ++t_;
  const double bc1 = 1.0 - std::pow(static_cast<double>(kBeta1), t_);
  const double bc2 = 1.0 - std::pow(static_cast<double>(kBeta2), t_);
  for (int i = 0; i < ps.size(); ++i) {
    Param& p = ps.at(i);
    if (p.grad.shape() != p.value.shape())
      throw InternalError("adam: parameter '" + p.name + "' has no gradient");
    Tensor& m = m_[static_cast<std::size_t>(i)];
    Tensor& v = v_[static_cast<std::size_t>(i)];
    float* pv = p.value.data();
    const float* pg = p.grad.data();
    float* pm = m.data();
    float* pvv = v.data();
    const std::int64_t n = p.value.size();
    for (std::int64_t j = 0; j < n; ++j) {
      const float g = pg[j];
      pm[j] = kBeta1 * pm[j] + (1.f - kBeta1) * g;
      pvv[j] = kBeta2 * pvv[j] + (1.f - kBeta2) * g * g;
      const double mhat = pm[j] / bc1;
      const double vhat = pvv[j] / bc2;
      pv[j] -= static_cast<float>(lr * mhat / (std::sqrt(vhat) + kEps));
    }
  }
}

void Adam::restore(std::vector<Tensor> m, std::vector<Tensor> v,
                   std::int64_t t) {
  if (m.size() != m_.size() || v.size() != v_.size())
    throw FormatError("adam: optimizer state has wrong tensor count");
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i].shape() != m_[i].shape() || v[i].shape() != v_[i].shape())
      throw FormatError("adam: optimizer state tensor " + std::to_string(i) +
                        " has wrong shape");
  if (t < 0) throw FormatError("adam: negative step count in state");
  m_ = std::move(m);
  v_ = std::move(v);
  t_ = t;
}

double cosine_lr(std::int64_t iter, const LrSchedule& s) {
  if (iter < 0) throw ArgumentError("cosine_lr: negative iteration");
  if (s.period <= 0) throw ConfigError("cosine_lr: period must be positive");
  if (s.lr_min > s.lr_max)
    throw ConfigError("cosine_lr: lr_min exceeds lr_max");
  const double u =
      s.restart
          ? static_cast<double>(iter % s.period) / static_cast<double>(s.period)
          : std::min(static_cast<double>(iter) / static_cast<double>(s.period),
                     1.0);
  return s.lr_min +
         0.5 * (s.lr_max - s.lr_min) *
             (1.0 + std::cos(3.14159265358979323846 * u));
}

}  // namespace fdan
