// Serial vs OpenMP timings for the per-instance kernels.
#include <omp.h>

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "cor/dataset.hpp"
#include "cor/evaluate.hpp"
#include "cor/noise.hpp"

using namespace cor;

namespace {

double best_of(int reps, const std::function<void()>& fn) {
  double best = 1e30;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-10s serial %8.4fs  parallel %8.4fs  speedup %5.2fx\n", name, serial, parallel, serial / parallel);
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::stoi(argv[1]) : 3;
  const std::string data = COR_DATA_DIR;
  dataset::Resources res;
  res.environments.push_back(load_environment_file(data + "/environments/gongguan.json"));
  res.environments.push_back(load_environment_file(data + "/environments/taipei_station.json"));
  res.lexicons.push_back(load_lexicon_file(data + "/lexicons/en.json"));
  res.lexicons.push_back(load_lexicon_file(data + "/lexicons/zh-TW.json"));
  const auto plan = dataset::GenerationPlan::defaults();
  std::printf("threads: %d, best of %d\n", omp_get_max_threads(), reps);

  std::vector<dataset::Instance> corpus;
  const double gs = best_of(reps, [&] { corpus = dataset::generate(plan, res, Policy::Serial); });
  const double gp = best_of(reps, [&] { corpus = dataset::generate(plan, res, Policy::Parallel); });
  report("generate", gs, gp);

  std::vector<noise::CalibrationItem> items;
  for (const auto& inst : corpus) {
    if (text::length(inst.utterance) >= 20) items.push_back({inst.utterance, &res.lexicon(inst.language), inst.seed});
  }
  const noise::SeverityThresholds t;
  const auto mix = noise::SeverityMixture::main_test();
  const double cs = best_of(reps, [&] { noise::calibrate(items, mix, {}, t, 1, Policy::Serial); });
  const double cp = best_of(reps, [&] { noise::calibrate(items, mix, {}, t, 1, Policy::Parallel); });
  report("calibrate", cs, cp);

  std::vector<eval::ModelOutput> outputs;
  for (const auto& inst : corpus) outputs.push_back({inst.id, inst.gold_trace_text});
  const eval::Scorer scorer(res);
  const double ss = best_of(reps, [&] { eval::score_all(corpus, outputs, scorer, Policy::Serial); });
  const double sp = best_of(reps, [&] { eval::score_all(corpus, outputs, scorer, Policy::Parallel); });
  report("score_all", ss, sp);
  return 0;
}
