#pragma once

#include <optional>

#include "bihm/model.hpp"
#include "bihm/rng.hpp"

namespace bihm {

/// State of a Gibbs chain over (x, h_1, ..., h_L).
struct GibbsState {
  Vector x;
  LatentConfig latents;
};

struct GibbsConfig {
  std::size_t num_sweeps = 10;
  /// Candidates drawn per importance-resampling step.
  std::size_t proposals_per_step = 25;
  /// Samples used to estimate p~*(x) for each visible candidate.
  std::size_t ptilde_k = 25;

  void validate() const;
};

/// Log resampling weights for candidate values of h_l (one per row), given
/// the neighbours h_{l-1} and h_{l+1} in `state`. Candidates are assumed to
/// come from the mixture 1/2 p(h_l | h_{l+1}) + 1/2 q(h_l | h_{l-1}), with
/// p(h_L | h_{L+1}) read as the prior; factors common to all candidates are
/// dropped.
Vector hidden_candidate_log_weights(const BihmModel& model, const GibbsState& state, int l,
                                    const Matrix& candidates);

/// Draw a new h_l (1 <= l <= L) by importance resampling from the mixture proposal.
Vector gibbs_update_hidden(const BihmModel& model, const GibbsState& state, int l, const GibbsConfig& config,
                           Rng& rng);

/// Draw a new x by importance resampling with proposals from p(x | h_1).
///
/// For a target p*(x | h) proportional to sqrt(p(x | h_1) q(x) q(h_1 | x)),
/// with q(x) = p*(x) = p~*(x) / Z^2, the weight of a candidate drawn from
/// p(x | h_1) is sqrt(p~*(x) q(h_1 | x) / p(x | h_1)). p~*(x) is replaced by
/// its importance-sampling estimate, so the update is approximate.
///
/// When `observed` is given (1 = observed), candidates copy state.x on the
/// observed positions and the proposal density covers only the free bits.
Vector gibbs_update_visible(const BihmModel& model, const GibbsState& state, const GibbsConfig& config, Rng& rng,
                            const Vector* observed = nullptr);

/// One sweep: odd latent layers, then even latent layers, then the visible layer.
void gibbs_sweep(const BihmModel& model, GibbsState& state, const GibbsConfig& config, Rng& rng,
                 const Vector* observed = nullptr);

/// Run config.num_sweeps sweeps; without `init` the chain starts from a draw of p(x, h).
GibbsState gibbs_sample(const BihmModel& model, const std::optional<GibbsState>& init, const GibbsConfig& config,
                        Rng& rng);

/// Fill the mask == 0 positions of `x_corrupt`. The chain starts from
/// h ~ q(h | x_corrupt); mask == 1 positions are never modified.
GibbsState inpaint_chain(const BihmModel& model, const Vector& x_corrupt, const Vector& mask,
                         const GibbsConfig& config, Rng& rng);
Vector inpaint(const BihmModel& model, const Vector& x_corrupt, const Vector& mask, const GibbsConfig& config,
               Rng& rng);

/// Mean of p(x | h_1) for the chain state, the usual way to display samples.
Vector expected_visible(const BihmModel& model, const GibbsState& state);

}  // namespace bihm
