#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "photonforge/analytic2p.hpp"
#include "photonforge/hilbert.hpp"
#include "photonforge/protocols.hpp"
#include "photonforge/trajectory.hpp"

namespace pf {

using Json = nlohmann::json;

// Rounded to 12 significant digits so that emitted values are reproducible text.
double round_sig(double x, int digits = 12);
std::string fmt(double x);

// {"re": [[...]], "im": [[...]]}, row-major.
Json matrix_json(const Matrix& m);
Json occupations_json(const std::vector<double>& v);

Json to_json(const TauOptimum& t);
Json to_json(const AdditionResult& a);
Json to_json(const FockCascadeResult& f);
Json to_json(const ScalingFit& s);
Json to_json(const ModeSplitting& m);
Json to_json(const CatResult& c);
Json to_json(const FilterTable& f);
Json to_json(const DegeneracyScan& d);

// Comma-separated table with a header row; numbers at 12 significant digits.
std::string csv_table(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows);
std::string wigner_csv(const WignerGrid& w);
std::string mode_csv(const TemporalMode& m);

}  // namespace pf
