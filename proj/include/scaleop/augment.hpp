#pragma once

#include "scaleop/rng.hpp"
#include "scaleop/scaling.hpp"

#include <functional>

namespace scaleop {

/// Grid-snapped sub-domain crop. `lambda` is the requested side fraction; the
/// realized fraction is the nearest grid-aligned one. Anchors are grid offsets
/// (cells) per axis; missing anchors default to zero.
struct CropSpec {
  Real lambda = 1.0;
  std::vector<Index> anchor;
  Index min_resolution = 32;
  bool symmetric_time = false;   // space-time blocks centered on the mid-time cut
  bool no_temporal_crop = false; // keep the full time window
};

/// Sub-domain sampling: restrict inputs and solution to a fraction-lambda
/// crop, take the crop's boundary data from the solution, rescale the crop to
/// unit size and transform the scale parameter (and the forcing, where the
/// law requires it). A full-domain crop reuses the instance's own boundary
/// data, so it degenerates to the original instance.
PdeInstance subdomain_sample(const PdeInstance& inst, const CropSpec& spec);

/// CropSpec with anchors drawn uniformly over the legal grid positions.
CropSpec random_crop(const PdeInstance& inst, Real lambda, Index min_res,
                     Philox& rng);

/// Space-time block crop for trajectory instances: spatial fraction
/// spec.lambda per spatial axis, temporal block symmetric around the mid-time
/// boundary. The effective scale factor is the cube root of the volume ratio
/// and the scale parameter maps as k -> lambda_geo * k.
PdeInstance spacetime_crop(const PdeInstance& traj, const CropSpec& spec,
                           Philox& rng);

/// Attaches a solution estimate to an unlabeled instance (the model forward,
/// or a reference solver when testing).
using Labeler = std::function<void(PdeInstance&)>;

/// One super-domain draw: fresh inputs at scale lambda*k, pseudo-labeled by
/// the model, then cropped back at rate 1/lambda so the crop's parameter
/// returns to k. The Eq.-7 loss compares the model on `crop` against the
/// crop's pseudo-label.
struct SuperSample {
  PdeInstance parent;  // inputs at scale lambda*k with the model's solution
  PdeInstance crop;    // rate-1/lambda sub-sample of the parent
  Real lambda = 1.0;
  std::vector<Index> anchor;  // crop offsets in parent grid cells
};

SuperSample superdomain_sample(Equation eq, Real k, Real lambda, Index res,
                               const Labeler& label, Philox& rng);

/// Realized per-axis fraction of a crop (cells_sub / cells_parent).
Real snapped_fraction(const Axis& parent, Real lambda, Index min_points,
                      Index* cells_out);

}  // namespace scaleop
