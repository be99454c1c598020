#pragma once

#include <string>
#include <vector>

#include "ttcast/tensor.hpp"

// Discrete PDE operators (5-point Laplacian with replicate boundaries) and the
// soft physics constraints that tie hidden-state updates to a diffusion or
// wave step. Residuals are mean-square so the loss weight is grid-size
// independent.

namespace ttcast::physics {

enum class Kind { none, diffusion, wave };

inline std::string kind_name(Kind k) {
  switch (k) {
    case Kind::none: return "none";
    case Kind::diffusion: return "diffusion";
    case Kind::wave: return "wave";
  }
  return "?";
}

inline Kind kind_from_name(const std::string& s) {
  if (s == "none") return Kind::none;
  if (s == "diffusion") return Kind::diffusion;
  if (s == "wave") return Kind::wave;
  throw ConfigError("unknown physics kind '" + s + "'");
}

// Per-layer physics configuration. The PDE coefficient (alpha or c²) is a
// learnable scalar stored as a softplus pre-activation so it stays ≥ 0.
template <class T>
struct PhysicsSpec {
  Kind kind = Kind::none;
  Tensor<T> coeff_raw;  // softplus(coeff_raw) = alpha (diffusion) or c² (wave)
  double lambda = 0.1;

  static PhysicsSpec make(Kind kind, double initial_coeff = 0.1, double lambda = 0.1) {
    PhysicsSpec s;
    s.kind = kind;
    s.lambda = lambda;
    // invert softplus: raw = log(exp(y) - 1)
    const double raw = std::log(std::expm1(initial_coeff));
    s.coeff_raw = Tensor<T>::scalar_value(static_cast<T>(raw));
    return s;
  }

  Tensor<T> coeff() const { return softplus(coeff_raw); }
};

// v' = v + alpha·Δv (explicit diffusion update).
template <class T>
Tensor<T> diffusion_step(const Tensor<T>& v, const Tensor<T>& alpha) {
  return add(v, scale_by(laplacian(v), alpha));
}

template <class T>
Tensor<T> diffusion_step(const Tensor<T>& v, T alpha) {
  return diffusion_step(v, Tensor<T>::scalar_value(alpha));
}

// v'' = 2v' − v + c²·Δv' with v' = v, v = v_prev.
template <class T>
Tensor<T> wave_step(const Tensor<T>& v, const Tensor<T>& v_prev, const Tensor<T>& c2) {
  check_same_shape(v, v_prev, "wave_step");
  return add(sub(scale(v, T(2)), v_prev), scale_by(laplacian(v), c2));
}

template <class T>
Tensor<T> wave_step(const Tensor<T>& v, const Tensor<T>& v_prev, T c2) {
  return wave_step(v, v_prev, Tensor<T>::scalar_value(c2));
}

// Mean-square diffusion residual ‖h̃ − h − alpha·Δh‖² / N.
template <class T>
Tensor<T> g_dif(const Tensor<T>& h, const Tensor<T>& h_tilde, const Tensor<T>& alpha) {
  check_same_shape(h, h_tilde, "g_dif");
  Tensor<T> residual = sub(h_tilde, diffusion_step(h, alpha));
  return mean(mul(residual, residual));
}

// Mean-square wave residual ‖h_next − 2h + h_prev − c²·Δh‖² / N.
template <class T>
Tensor<T> g_wave(const Tensor<T>& h_prev, const Tensor<T>& h, const Tensor<T>& h_next,
                 const Tensor<T>& c2) {
  check_same_shape(h_prev, h, "g_wave");
  check_same_shape(h, h_next, "g_wave");
  Tensor<T> residual = sub(h_next, wave_step(h, h_prev, c2));
  return mean(mul(residual, residual));
}

// Physics loss of one step's intermediate hidden tensors. For diffusion every
// (H, H̃) pair contributes; for wave, consecutive orders are treated as a
// micro-time axis: residual(H^{(t,o)}, H̃^{(t,o)}, H̃^{(t,o+1)}) for o < m.
template <class T>
Tensor<T> step_physics_loss(const std::vector<Tensor<T>>& maps,
                            const std::vector<Tensor<T>>& updated, const PhysicsSpec<T>& spec) {
  if (spec.kind == Kind::none)
    throw ContractError("step_physics_loss: kind=none contributes no physics term");
  if (maps.size() != updated.size())
    throw ShapeError("step_physics_loss: map count mismatch");
  Tensor<T> coeff = spec.coeff();
  Tensor<T> total = Tensor<T>::scalar_value(T(0));
  if (spec.kind == Kind::diffusion) {
    for (std::size_t o = 0; o < maps.size(); ++o)
      total = add(total, g_dif(maps[o], updated[o], coeff));
  } else {
    for (std::size_t o = 0; o + 1 < maps.size(); ++o)
      total = add(total, g_wave(maps[o], updated[o], updated[o + 1], coeff));
  }
  return total;
}

// L_dp of a whole sequence: sum of per-step contributions. `hidden_history`
// holds one (maps, updated) pair per time step.
template <class T>
Tensor<T> sequence_physics_loss(
    const std::vector<std::pair<std::vector<Tensor<T>>, std::vector<Tensor<T>>>>& hidden_history,
    const PhysicsSpec<T>& spec) {
  Tensor<T> total = Tensor<T>::scalar_value(T(0));
  for (const auto& [maps, updated] : hidden_history)
    total = add(total, step_physics_loss(maps, updated, spec));
  return total;
}

}  // namespace ttcast::physics
