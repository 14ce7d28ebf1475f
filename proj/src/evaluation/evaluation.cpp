#include "vmap/evaluation/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "vmap/core/kahan.hpp"
#include "vmap/oracle/value_map.hpp"

namespace vmap::evaluation {

using instructions::Mode;

Predictor model_predictor(const model::Model& model) {
  return [&model](const Example& e) { return model.predict(*e.map, e.query()); };
}

Predictor oracle_predictor() {
  return [](const Example& e) {
    if (!e.target) throw std::invalid_argument("oracle predictor needs an oracle map");
    return e.target->values;
  };
}

PolicyScore score_policy(const Grid& values, const WorldMap& map, Cell goal, const Grid& oracle, double temperature,
                         const MdpConfig& mdp) {
  using oracle::evaluate_policy_exact;
  const Grid v_pi = evaluate_policy_exact(map, goal, oracle::softmax_policy(values, temperature), mdp);
  const Grid v_ref = evaluate_policy_exact(map, goal, oracle::softmax_policy(oracle, temperature), mdp);
  const Grid v_opt = evaluate_policy_exact(map, goal, oracle::greedy_policy(oracle), mdp);
  const Grid v_rand = evaluate_policy_exact(map, goal, oracle::uniform_policy(), mdp);

  PolicyScore score;
  KahanSum pi, ref, opt, rand;
  for (Cell c : map.grass_cells()) {
    if (c == goal) continue;
    const std::size_t i = c.index();
    if (std::abs(v_ref[i] - v_rand[i]) < 1e-12) {
      ++score.excluded_starts;
      continue;
    }
    pi.add(v_pi[i]);
    ref.add(v_ref[i]);
    opt.add(v_opt[i]);
    rand.add(v_rand[i]);
  }
  score.starts = pi.count();
  if (score.starts == 0) return score;
  score.policy_quality = (pi.mean() - rand.mean()) / (ref.mean() - rand.mean());
  score.optimal_ratio = (pi.mean() - rand.mean()) / (opt.mean() - rand.mean());
  return score;
}

int goal_distance(const Grid& values, Cell goal) { return gridworld::manhattan(oracle::argmax_cell(values), goal); }

double value_mse(const Grid& values, const Grid& oracle) {
  KahanSum sum;
  for (std::size_t i = 0; i < values.size(); ++i) sum.add((values[i] - oracle[i]) * (values[i] - oracle[i]));
  return sum.mean();
}

const Aggregate& EvalReport::aggregate(std::optional<Mode> mode) const {
  if (!mode) return combined;
  return *mode == Mode::Local ? local : global;
}

namespace {

Aggregate aggregate_of(const std::vector<RecordScore>& rows, std::optional<Mode> mode) {
  KahanSum pq, ratio, dist, mse;
  for (const auto& r : rows) {
    if (mode && r.mode != *mode) continue;
    pq.add(r.policy_quality);
    ratio.add(r.optimal_ratio);
    dist.add(r.distance);
    mse.add(r.mse);
  }
  return {pq.count(), pq.mean(), ratio.mean(), dist.mean(), mse.mean()};
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

EvalReport evaluate(const Predictor& predict, const instructions::Dataset& dataset, std::span<const Example> examples,
                    const EvalConfig& config) {
  EvalReport report;
  report.temperature = config.temperature;
  report.records.reserve(examples.size());
  for (const Example& e : examples) {
    if (!e.target) throw std::invalid_argument("evaluate: example without an oracle map");
    const auto& rec = dataset.records.at(e.record);
    const Grid values = predict(e);
    const auto score = score_policy(values, *e.map, e.goal, e.target->values, config.temperature, config.mdp);
    report.records.push_back({e.record, rec.map_id, rec.split, rec.mode, score.policy_quality, score.optimal_ratio,
                              goal_distance(values, e.goal), value_mse(values, e.target->values),
                              score.excluded_starts});
  }
  report.local = aggregate_of(report.records, Mode::Local);
  report.global = aggregate_of(report.records, Mode::Global);
  report.combined = aggregate_of(report.records, std::nullopt);
  return report;
}

std::string format_report_table(const EvalReport& report, const std::string& title) {
  std::ostringstream out;
  out << title << "\n";
  out << std::left << std::setw(16) << "metric" << std::right << std::setw(10) << "local" << std::setw(10) << "global"
      << std::setw(10) << "combined" << "\n";
  auto row = [&](const char* name, auto field) {
    out << std::left << std::setw(16) << name << std::right << std::fixed;
    for (const Aggregate* a : {&report.local, &report.global, &report.combined}) {
      if (a->count == 0) {
        out << std::setw(10) << "-";
      } else {
        out << std::setw(10) << std::setprecision(3) << field(*a);
      }
    }
    out << "\n";
  };
  row("policy quality", [](const Aggregate& a) { return a.policy_quality; });
  row("optimal ratio", [](const Aggregate& a) { return a.optimal_ratio; });
  row("distance", [](const Aggregate& a) { return a.mean_distance; });
  row("mse", [](const Aggregate& a) { return a.mse; });
  out << std::left << std::setw(16) << "records" << std::right;
  for (const Aggregate* a : {&report.local, &report.global, &report.combined}) out << std::setw(10) << a->count;
  out << "\n";
  return out.str();
}

std::string format_report_lines(const EvalReport& report) {
  std::ostringstream out;
  const std::pair<const char*, const Aggregate*> groups[] = {
      {"local", &report.local}, {"global", &report.global}, {"combined", &report.combined}};
  for (const auto& [name, a] : groups) {
    out << "aggregate\tmode=" << name << "\tcount=" << a->count << "\tpolicy_quality=" << num(a->policy_quality)
        << "\toptimal_ratio=" << num(a->optimal_ratio) << "\tdistance=" << num(a->mean_distance)
        << "\tmse=" << num(a->mse) << "\ttemperature=" << num(report.temperature) << "\n";
  }
  for (const auto& r : report.records) {
    out << "record\tindex=" << r.record << "\tmap=" << r.map_id << "\tsplit=" << instructions::split_name(r.split)
        << "\tmode=" << instructions::mode_name(r.mode) << "\tpolicy_quality=" << num(r.policy_quality)
        << "\toptimal_ratio=" << num(r.optimal_ratio) << "\tdistance=" << r.distance << "\tmse=" << num(r.mse)
        << "\texcluded_starts=" << r.excluded_starts << "\n";
  }
  return out.str();
}

std::size_t levenshtein(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::size_t DiversityHistogram::edit_bin(double edit) {
  if (edit >= 1.0) return kEditBins - 1;
  // The small offset keeps exact tenths (0.3 = 3/10) in their own bin.
  return std::min(kEditBins - 2, static_cast<std::size_t>(std::floor(edit * 10.0 + 1e-9)));
}

DiversityHistogram diversity_analysis(const instructions::Dataset& dataset, std::size_t neighbors) {
  const auto train = dataset.select(instructions::Split::Train);
  const auto test = dataset.select(instructions::Split::Test);
  if (train.empty() || test.empty()) throw std::invalid_argument("diversity analysis needs both splits");
  DiversityHistogram h;
  h.test_records = test;
  std::vector<Neighbor> all(train.size());
  for (std::size_t t : test) {
    const auto& rec = dataset.records[t];
    for (std::size_t k = 0; k < train.size(); ++k) {
      const auto& other = dataset.records[train[k]];
      all[k] = {train[k], static_cast<double>(levenshtein(rec.tokens, other.tokens)) / static_cast<double>(rec.tokens.size()),
                gridworld::manhattan(rec.goal, other.goal)};
    }
    const std::size_t n = std::min(neighbors, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n), all.end(),
                      [](const Neighbor& x, const Neighbor& y) {
                        return x.edit != y.edit ? x.edit < y.edit : x.train_record < y.train_record;
                      });
    std::vector<Neighbor> best(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(n));
    for (const auto& nb : best) {
      ++h.counts[DiversityHistogram::edit_bin(nb.edit)][static_cast<std::size_t>(nb.goal_distance)];
      ++h.total;
    }
    h.neighbors.push_back(std::move(best));
  }
  return h;
}

std::string render_histogram_ascii(const DiversityHistogram& h) {
  std::ostringstream out;
  out << "rows: normalized edit distance bin; columns: goal distance 0.." << DiversityHistogram::kDistanceBins - 1
      << "\n";
  out << std::setw(9) << "";
  for (std::size_t d = 0; d < DiversityHistogram::kDistanceBins; ++d) out << std::setw(5) << d;
  out << "\n";
  for (std::size_t e = 0; e < DiversityHistogram::kEditBins; ++e) {
    std::ostringstream label;
    if (e + 1 == DiversityHistogram::kEditBins) {
      label << ">=1.0";
    } else {
      label << std::fixed << std::setprecision(1) << e / 10.0 << "-" << (e + 1) / 10.0;
    }
    out << std::setw(9) << label.str();
    for (std::size_t d = 0; d < DiversityHistogram::kDistanceBins; ++d) out << std::setw(5) << h.counts[e][d];
    out << "\n";
  }
  out << "total " << h.total << "\n";
  return out.str();
}

gridworld::Image render_histogram_image(const DiversityHistogram& h, int scale) {
  if (scale < 1) throw std::invalid_argument("scale must be positive");
  gridworld::Image img;
  img.width = static_cast<int>(DiversityHistogram::kDistanceBins) * scale;
  img.height = static_cast<int>(DiversityHistogram::kEditBins) * scale;
  img.rgb.assign(static_cast<std::size_t>(img.width * img.height * 3), 255);
  std::size_t peak = 1;
  for (const auto& row : h.counts) {
    for (std::size_t c : row) peak = std::max(peak, c);
  }
  for (std::size_t e = 0; e < DiversityHistogram::kEditBins; ++e) {
    for (std::size_t d = 0; d < DiversityHistogram::kDistanceBins; ++d) {
      // log scale so sparse bins stay visible; white is empty, dark is dense
      const double f = h.counts[e][d] == 0 ? 0.0
                                           : std::log1p(static_cast<double>(h.counts[e][d])) /
                                                 std::log1p(static_cast<double>(peak));
      const auto level = static_cast<std::uint8_t>(std::lround(255.0 * (1.0 - f)));
      img.fill_rect(static_cast<int>(d) * scale, static_cast<int>(e) * scale, scale, scale, level, level, 255);
    }
  }
  return img;
}

}  // namespace vmap::evaluation
