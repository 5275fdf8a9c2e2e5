// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

#include "aerosplat/fixer.hpp"

#include <cmath>
#include <fstream>

#include "aerosplat/errors.hpp"
#include "aerosplat/process.hpp"
#include "aerosplat/trajectories.hpp"

namespace aerosplat {

Image run_fixer(const Fixer& fixer, const FixRequest& request) {
  if (!request.noisy || !request.reference) {
    throw FixerError(fixer.name() + ": request is missing an image");
  }
  Image out = fixer.fix(request);
  if (!out.same_shape(*request.noisy)) {
    throw FixerError(fixer.name() + ": output shape differs from the input");
  }
  for (double v : out.data()) {
    if (!std::isfinite(v)) throw FixerError(fixer.name() + ": non-finite output");
  }
  return clamp01(std::move(out));
}

Image IdentityFixer::fix(const FixRequest& request) const { return *request.noisy; }

BlurFixer::BlurFixer(double sigma) : sigma_(sigma) {
  if (!(sigma > 0.0)) throw DomainError("blur fixer: sigma must be > 0");
}

Image BlurFixer::fix(const FixRequest& request) const {
  return gaussian_blur(*request.noisy, sigma_);
}

OracleFixer::OracleFixer(GaussianScene hidden, RenderSettings settings)
    : hidden_(std::move(hidden)), settings_(settings) {
  settings_.validate();
}

Image OracleFixer::fix(const FixRequest& request) const {
  return render(hidden_, request.novel, settings_).image;
}

ExternalFixer::ExternalFixer(std::string executable, std::filesystem::path scratch_dir,
                             bool deterministic)
    : executable_(std::move(executable)),
      scratch_(std::move(scratch_dir)),
      deterministic_(deterministic) {
  if (executable_.empty()) throw DomainError("external fixer: empty executable");
}

Image ExternalFixer::fix(const FixRequest& request) const {
  std::filesystem::create_directories(scratch_);
  const std::string stem = "view_" + std::to_string(request.view_id);
  const auto noisy = scratch_ / (stem + "_noisy.png");
  const auto ref = scratch_ / (stem + "_reference.png");
  const auto pose = scratch_ / (stem + "_pose.txt");
  const auto output = scratch_ / (stem + "_fixed.png");
  std::filesystem::remove(output);
  write_image(noisy, *request.noisy);
  write_image(ref, *request.reference);
  {
    TrajectoryPlan plan;
    plan.views.push_back({request.view_id, 0, request.novel.pose, request.novel.intrinsics, {}});
    plan.views.push_back({request.view_id, 0, request.reference_camera.pose,
                          request.reference_camera.intrinsics, {}});
    std::ofstream f(pose);
    write_trajectory(f, plan);
    if (!f) throw FixerError("external fixer: cannot write " + pose.string());
  }
  const ProcessResult r =
      run_process({executable_, noisy.string(), ref.string(), pose.string(), output.string()});
  if (r.exit_code != 0) {
    throw FixerError("external fixer exited with status " + std::to_string(r.exit_code) +
                     " for view " + std::to_string(request.view_id));
  }
  if (!std::filesystem::exists(output)) {
    throw FixerError("external fixer produced no output for view " +
                     std::to_string(request.view_id));
  }
  return read_image(output);
}

}  // namespace aerosplat
