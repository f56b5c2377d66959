#include <CLI11.hpp>

#include <iostream>

#include "ips/acceptance.hpp"
#include "ips/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"acceptance suite"};
  ips::AcceptanceOptions opt;
  unsigned threads = 0;
  app.add_option("--seed", opt.seed, "master seed");
  app.add_option("--out", opt.out_dir, "directory for the per-criterion CSV files");
  app.add_option("--only", opt.only, "criterion ids, names or tags")->delimiter(',');
  app.add_option("--kernel", opt.kernel2, "kernel literal for the d = 2 models");
  app.add_option("--threads", threads, "worker threads, 0 = all cores");
  CLI11_PARSE(app, argc, argv);
  ips::set_default_threads(threads);
  try {
    const auto results = ips::run_acceptance(opt, std::cout);
    std::size_t failed = 0;
    for (const auto& r : results) failed += !r.pass;
    std::cout << (failed ? "FAILED " : "ALL PASSED ") << results.size() - failed << "/" << results.size() << std::endl;
    return failed ? 1 : 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 2;
  }
}
