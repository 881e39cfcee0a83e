#pragma once

#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "nhlab/bundle.hpp"
#include "nhlab/cycles.hpp"
#include "nhlab/io.hpp"
#include "nhlab/lyapunov.hpp"
#include "nhlab/torus.hpp"

namespace nhlab::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kSuccess = 0, kNumericalFailure = 1, kUsageError = 2 };

/// Parses argv, runs the requested pipeline and writes its files plus
/// manifest.json into --out.
int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr);
int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr);

/// Datasets keyed by file stem.
struct FigureResults {
  std::vector<std::pair<std::string, ContinuationBranch>> branches;
  std::vector<std::pair<std::string, SectionCurve>> curves;
  std::vector<std::pair<std::string, AngularOrbit>> orbits;
  std::vector<std::pair<std::string, BundleFrame>> frames;

  [[nodiscard]] bool empty() const { return branches.empty() && curves.empty() && orbits.empty() && frames.empty(); }
};

Table branch_table(const ContinuationBranch& b);
Table curve_table(const SectionCurve& c);
Table orbit_table(const AngularOrbit& o);
Table frame_table(const BundleFrame& f);
Table type_number_table(const TypeNumberEstimate& e);

/// Writes one table per dataset; returns the written file names in order.
std::vector<std::string> export_figure_data(const FigureResults& results, OutputSet& out, TableFormat fmt);

}  // namespace nhlab::cli
