// Copyright 2026 The aerosplat Authors
// SPDX-License-Identifier: Apache-2.0

// View restoration stage. A fixer maps a noisy novel render, conditioned on a
// reference view and both poses, to a restored image of the same size.

#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "aerosplat/geometry.hpp"
#include "aerosplat/image.hpp"
#include "aerosplat/renderer.hpp"
#include "aerosplat/scene.hpp"

namespace aerosplat {

struct FixerCapabilities {
  bool pure = true;           // no side effects outside the returned image
  bool deterministic = true;  // same request -> same output
  bool thread_safe = true;    // fix() may run concurrently
};

struct FixRequest {
  const Image* noisy = nullptr;
  const Image* reference = nullptr;
  Camera novel;
  Camera reference_camera;
  int view_id = 0;
};

class Fixer {
 public:
  virtual ~Fixer() = default;
  virtual std::string name() const = 0;
  virtual FixerCapabilities capabilities() const = 0;
  virtual Image fix(const FixRequest& request) const = 0;
};

// Calls fixer.fix and enforces the output contract: same resolution and
// channel count as the noisy input (FixerError otherwise), values clamped to
// [0, 1], non-finite values rejected.
Image run_fixer(const Fixer& fixer, const FixRequest& request);

class IdentityFixer final : public Fixer {
 public:
  std::string name() const override { return "identity"; }
  FixerCapabilities capabilities() const override { return {}; }
  Image fix(const FixRequest& request) const override;
};

class BlurFixer final : public Fixer {
 public:
  explicit BlurFixer(double sigma);
  std::string name() const override { return "blur"; }
  FixerCapabilities capabilities() const override { return {}; }
  Image fix(const FixRequest& request) const override;

 private:
  double sigma_;
};

// Renders a hidden ground-truth scene at the novel pose. Test harness only.
class OracleFixer final : public Fixer {
 public:
  OracleFixer(GaussianScene hidden, RenderSettings settings);
  std::string name() const override { return "oracle"; }
  FixerCapabilities capabilities() const override { return {}; }
  Image fix(const FixRequest& request) const override;

 private:
  GaussianScene hidden_;
  RenderSettings settings_;
};

// Runs `executable noisy.png reference.png pose.txt output.png` per view in
// a scratch directory; exit status 0 means success. The pose file holds two
// lines in the trajectory text format (novel view, then reference view).
class ExternalFixer final : public Fixer {
 public:
  ExternalFixer(std::string executable, std::filesystem::path scratch_dir,
                bool deterministic = false);
  std::string name() const override { return "extern"; }
  FixerCapabilities capabilities() const override { return {false, deterministic_, true}; }
  Image fix(const FixRequest& request) const override;

 private:
  std::string executable_;
  std::filesystem::path scratch_;
  bool deterministic_;
};

}  // namespace aerosplat
