#pragma once

#include "gplab/grid.hpp"
#include "gplab/rough_path.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace gplab {

/// Shortest round-trip decimal form (17 significant digits).
std::string format_double(double v);

std::uint64_t fnv1a64(const std::string& s);
std::string hex64(std::uint64_t v);

/// Canonical "key=value\n" dump in key order; the config hash is taken of this.
std::string canonical_config(const std::map<std::string, std::string>& kv);

/// Flat key=value file; '#' starts a comment, blank lines ignored.
std::map<std::string, std::string> parse_config_file(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

// CSV serializations (header line + rows, '\n' separated)
std::string to_csv(const GridFunction1& g);    // i,t_i,v_1..v_m
std::string to_csv(const GridFunction2& h);    // i,j,t_i,t_j,v_1..v_m
std::string to_csv(const ConvergenceTable& t); // level,mesh,sum,abs_err_vs_extrapolated
std::string to_csv_full(const ConvergenceTable& t); // level,mesh,value,ref,abs_err,observed_order

/// Lift persistence: shape metadata plus flat per-level arrays; doubles
/// round-trip exactly.
std::string lift_to_json(const RoughLift& lift);
RoughLift lift_from_json(const std::string& json_text);

/// Chaos persistence: {r, n_max, kernels: [{order, entries: [{multiset,
/// coeff}]}]}; exact round-trip.
class ChaosExpansion;
std::string chaos_to_json(const ChaosExpansion& c);
ChaosExpansion chaos_from_json(const std::string& json_text);

} // namespace gplab
