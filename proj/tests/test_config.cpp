#include <filesystem>

#include "doctest.h"
#include "morse/config.hpp"
#include "morse/errors.hpp"

using namespace morse;

namespace {

std::string error_of(const std::string& yaml) {
  try {
    config::parse_config(yaml);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

const char* kBase = R"(
name: t
manifold:
  kind: sphere
  dim: 2
function: z
)";

}  // namespace

TEST_CASE("catalog configs parse") {
  int seen = 0;
  for (const auto& entry : std::filesystem::directory_iterator(MORSE_CONFIG_DIR)) {
    if (entry.path().extension() != ".yaml") continue;
    CAPTURE(entry.path().string());
    const auto cfg = config::load_config(entry.path().string());
    CHECK_FALSE(cfg.name.empty());
    CHECK_NOTHROW(cfg.manifold());
    CHECK_NOTHROW(cfg.flow_spec());
    ++seen;
  }
  CHECK(seen == 7);
}

TEST_CASE("fields") {
  const auto cfg = config::parse_config(std::string(kBase) + R"(
critical:
  grad_tol: 1.0e-11
  grid: [4, 4, 4]
integration:
  rtol: 1.0e-8
homology:
  coefficients: [Z, Q, Z/3]
forms:
  area:
    dx^dy: z
residues:
  forms: [area]
  epsilon0: 2.0e-3
)");
  CHECK(cfg.dim == 2);
  CHECK(cfg.critical.grad_tol == 1e-11);
  CHECK(cfg.seeds.grid == std::vector<int>{4, 4, 4});
  CHECK(cfg.rtol == 1e-8);
  CHECK(cfg.flow_spec().rtol == 1e-8);
  REQUIRE(cfg.coefficients.size() == 3);
  CHECK(cfg.coefficients[2].kind == complex::CoefficientKind::ModP);
  CHECK(cfg.coefficients[2].modulus == 3);
  CHECK(cfg.form("area").form.degree() == 2);
  CHECK(cfg.residue.epsilon0 == 2e-3);
  CHECK(cfg.function_expression(true).to_string() != cfg.function_expression().to_string());
  CHECK_THROWS_AS(cfg.form("nope"), ConfigError);
}

TEST_CASE("unknown keys are named with their path") {
  CHECK(error_of(std::string(kBase) + "functon: z\n").find("'functon'") != std::string::npos);
  CHECK(error_of(std::string(kBase) + "residues:\n  int_tl: 1.0e-4\n").find("'residues.int_tl'") !=
        std::string::npos);
  CHECK(error_of(std::string(kBase) + "homology:\n  local_system:\n    rnk: 1\n")
            .find("'homology.local_system.rnk'") != std::string::npos);
}

TEST_CASE("missing keys are listed") {
  const std::string e = error_of("name: t\n");
  CHECK(e.find("'manifold'") != std::string::npos);
  CHECK(e.find("'function'") != std::string::npos);
  CHECK(error_of("manifold:\n  kind: sphere\nfunction: z\n").find("'manifold.dim'") != std::string::npos);
  CHECK(error_of("manifold:\n  kind: implicit\nfunction: z\n").find("'manifold.constraint'") != std::string::npos);
  CHECK(error_of(std::string(kBase) + "homology:\n  coefficients: [twisted]\n").find("local_system") !=
        std::string::npos);
}

TEST_CASE("invalid values") {
  CHECK(error_of(std::string(kBase) + "critical:\n  grad_tol: -1\n").find("critical.grad_tol") != std::string::npos);
  CHECK(error_of(std::string(kBase) + "integration:\n  atol: 0\n").find("integration.atol") != std::string::npos);
  CHECK(error_of(std::string(kBase) + "homology:\n  coefficients: [Z/1]\n").find("Z/1") != std::string::npos);
  CHECK(error_of("manifold:\n  kind: cube\n  dim: 2\nfunction: z\n").find("cube") != std::string::npos);
  CHECK(error_of(std::string(kBase) + "pairing:\n  forms: [ghost]\n").find("ghost") != std::string::npos);
  CHECK(error_of(std::string(kBase) + "forms:\n  bad:\n    dq: 1\n").find("bad") != std::string::npos);
  CHECK(error_of("[1, 2]").find("mapping") != std::string::npos);
  CHECK(error_of("a: [").find("malformed") != std::string::npos);
  CHECK_THROWS_AS(config::load_config("/nonexistent/run.yaml"), ConfigError);
}

TEST_CASE("sections are canonical") {
  const auto a = config::parse_config(std::string(kBase));
  const auto b = config::parse_config("function:   z\nmanifold: {kind: sphere, dim: 2}\nname: t\n");
  CHECK(a.sections.at("manifold") == b.sections.at("manifold"));
  CHECK(a.sections.at("function") == b.sections.at("function"));
  const auto c = config::parse_config("function: z + 0.1*x\nmanifold: {kind: sphere, dim: 2}\n");
  CHECK(a.sections.at("function") != c.sections.at("function"));
}
