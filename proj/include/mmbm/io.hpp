#pragma once

#include <string>
#include <vector>

#include "mmbm/model.hpp"
#include "mmbm/simulation.hpp"
#include "mmbm/validation.hpp"

namespace mmbm {

/// Parses and validates a model document
/// {"Q": [[...]], "mu": [...], "sigma2": [...], "b": <number>} (row-major Q).
MmbmModel load_model_json(const std::string& path);
MmbmModel parse_model_json(const std::string& text);

/// %.17g — round-trip exact for doubles.
std::string fmt17(double v);

/// CSV with header x,phase_1,...,phase_m; values is rows x m.
void write_density_csv(const std::string& path, const std::vector<double>& xs,
                       const Matrix& values);

/// CSV with header bin_left,bin_right,phase_1,...,phase_m.
void write_histogram_csv(const std::string& path, const EmpiricalLaw& law);

/// CSV with header eps,distance,mass0,massb,cond_N.
void write_sweep_csv(const std::string& path, const SweepReport& report);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace mmbm
