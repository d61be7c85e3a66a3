#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <exception>
#include <set>

#include "criteria.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite: one PASS/FAIL line per criterion"};
  fmvae::acceptance::Context ctx;
  ctx.cache = "acceptance_cache";
  std::vector<int> only;
  app.add_option("--cache", ctx.cache, "Directory for trained models and logs");
  app.add_option("--only", only, "Run just these criteria");
  CLI11_PARSE(app, argc, argv);

  const std::set<int> wanted(only.begin(), only.end());
  int failures = 0;
  for (const auto& c : fmvae::acceptance::all_criteria()) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    fmvae::acceptance::Outcome out;
    try {
      out = c.run(ctx);
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("criterion %d %s: %s - %s [%.1f s]\n", c.id, out.pass ? "PASS" : "FAIL", c.title, out.detail.c_str(),
                secs);
    std::fflush(stdout);
    failures += out.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
