#include <cstdio>
#include <exception>
#include <iostream>

#include "latepoints/experiment.hpp"

namespace ex = latepoints::experiment;

namespace {

void print_theory_table(const ex::ExperimentConfig& cfg) {
  using latepoints::theory::ExponentKind;
  const auto betas = cfg.given("beta") ? cfg.betas : std::vector<double>{0.25, 0.5, 0.75};
  std::printf("%8s %8s %10s %10s %10s %10s %10s\n", "alpha", "beta", "late", "fixed", "late_disc", "rho",
              "rho_hat");
  for (double a : cfg.alphas)
    for (double b : betas)
      std::printf("%8.4g %8.4g %10.6f %10.6f %10.6f %10.6f %10.6f\n", a, b,
                  latepoints::theory::predicted_exponent(ExponentKind::late_count, a),
                  latepoints::theory::predicted_exponent(ExponentKind::fixed_disc, a, b),
                  latepoints::theory::predicted_exponent(ExponentKind::late_disc, a, b),
                  latepoints::theory::predicted_exponent(ExponentKind::pair_rho, a, b),
                  latepoints::theory::predicted_exponent(ExponentKind::pair_rho_hat, a, b));
}

}  // namespace

int main(int argc, char** argv) {
  ex::ExperimentConfig cfg;
  try {
    cfg = ex::parse_config(argc, argv);
  } catch (const ex::HelpRequested& h) {
    std::cout << h.what();
    return 0;
  } catch (const ex::UsageError& e) {
    std::cerr << "latepoints: " << e.what() << "\n";
    return 1;
  }

  try {
    const int code = ex::run(cfg);
    if (cfg.mode == ex::Mode::theory) print_theory_table(cfg);
    if (code != 0) std::cerr << "latepoints: some replicas failed; see " << (cfg.out / "manifest.json") << "\n";
    return code;
  } catch (const std::exception& e) {
    std::cerr << "latepoints: " << e.what() << "\n";
    return 2;
  }
}
