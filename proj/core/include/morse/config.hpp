#pragma once

// Run configuration. The on-disk format is YAML; see docs/config.md.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "morse/complex.hpp"
#include "morse/connections.hpp"
#include "morse/critical.hpp"
#include "morse/currents.hpp"
#include "morse/flow.hpp"

namespace morse::config {

struct NamedForm {
  std::string name;
  std::vector<std::pair<std::string, std::string>> terms;  // (monomial, coefficient text)
  expr::FormExpression form;
};

struct FmeConfig {
  std::string form;
  int samples = 20;
  std::uint64_t seed = 7;
  double fd_step = 1e-4;
  double margin = 1e-2;
  double tolerance = 1e-3;
};

struct RunConfig {
  std::string name;

  std::string manifold_kind;  // sphere | torus | klein | implicit
  int dim = 0;              // sphere, torus
  int ambient_dim = 0;      // implicit
  std::string constraint;   // implicit
  std::optional<int> euler;

  std::string function;  // empty for sphere17 flows
  flow::FlowKind flow_kind = flow::FlowKind::GradientUphill;
  Vec direction;  // sphere17

  critical::CriticalOptions critical;
  critical::SeedSpec seeds;
  double rtol = 1e-9;
  double atol = 1e-11;
  double max_time = 200.0;
  double capture_radius = 1e-4;
  connections::ConnectionOptions connection;
  currents::ResidueOptions residue;
  double int_tol = 1e-4;
  std::vector<std::string> residue_forms;

  std::vector<complex::Coefficients> coefficients{complex::Coefficients::integers()};
  bool duality = true;

  std::vector<NamedForm> forms;
  std::optional<FmeConfig> fme;
  std::vector<std::string> pairing_forms;
  double pairing_tol = 1e-5;
  std::vector<std::string> chain_forms;
  double chain_tol = 1e-4;

  std::string output;

  /// Canonical text of each top-level section, used for cache keys.
  std::map<std::string, std::string> sections;
  /// Whole document as JSON text, echoed into reports.
  std::string echo_json;

  geometry::ManifoldBackend manifold() const;
  expr::ScalarExpression function_expression(bool negate = false) const;
  flow::FlowSpec flow_spec(bool negate = false) const;
  const NamedForm& form(const std::string& name) const;
};

/// Throws ConfigError naming unknown or missing keys and invalid values.
RunConfig parse_config(const std::string& yaml_text);
RunConfig load_config(const std::string& path);

}  // namespace morse::config
