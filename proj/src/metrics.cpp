#include "quorum/metrics.hpp"

#include <cmath>

#include <spdlog/fmt/fmt.h>

namespace quorum {

namespace {

const LabelAssignment& gold_of(const TextEntry& e) {
  if (!e.gold) throw MissingGold(e.entry_id);
  return *e.gold;
}

std::set<std::string> lowered(const std::set<std::string>& codes) {
  std::set<std::string> out;
  for (const auto& c : codes) out.insert(to_lower(trim(c)));
  return out;
}

std::set<std::string> codes_for(const LabelAssignment& labels, const std::string& key) {
  const auto it = labels.by_key.find(key);
  return it == labels.by_key.end() ? std::set<std::string>{} : lowered(it->second);
}

const std::optional<LabelAssignment>& final_of(const FinalLabels& final, const TextEntry& e) {
  static const std::optional<LabelAssignment> none;
  const auto it = final.find(e.entry_id);
  return it == final.end() ? none : it->second;
}

bool all_gold(const std::vector<TextEntry>& entries) {
  return !entries.empty() && std::all_of(entries.begin(), entries.end(), [](const TextEntry& e) { return e.gold; });
}

bool agree_on_key(const std::vector<Verdict>& verdicts, const std::string& key) {
  if (verdicts.empty()) return false;
  for (const auto& v : verdicts) {
    if (v.failed()) return false;
  }
  const auto first = codes_for(*verdicts.front().labels, key);
  for (const auto& v : verdicts) {
    if (codes_for(*v.labels, key) != first) return false;
  }
  return true;
}

double task_accuracy(const FinalLabels& final, const std::vector<TextEntry>& entries, const TaskSpec& spec) {
  return spec.kind == TaskKind::MultiLabel ? multilabel_accuracy(final, entries, spec)
                                           : multiclass_accuracy(final, entries, spec);
}

// Shared by batch and run level: counts and accuracies over a set of outcomes.
BatchMetrics measure(const std::string& batch_id, const std::vector<DiscussionOutcome>& outcomes,
                     const std::vector<TextEntry>& entries, const TaskSpec& spec) {
  BatchMetrics m;
  m.batch_id = batch_id;
  m.b = entries.size();
  FinalLabels pre;
  FinalLabels post;
  for (const auto& o : outcomes) {
    if (judge(o.initial)) ++m.b_before;
    if (judge(o.final_verdicts())) ++m.b_after;
    pre[o.entry_id] = pre_discussion_label(o.initial);
    post[o.entry_id] = o.final_labels;
  }
  m.rates = agreement_rates(m.b_before, m.b_after, m.b);
  const bool gold = all_gold(entries);
  if (gold) {
    m.acc_pre = task_accuracy(pre, entries, spec);
    m.acc_post = task_accuracy(post, entries, spec);
  }
  for (const auto& key : spec.keys) {
    KeyMetrics k;
    k.key = key.name;
    for (const auto& o : outcomes) {
      if (agree_on_key(o.initial, key.name)) ++k.b_before;
      if (agree_on_key(o.final_verdicts(), key.name)) ++k.b_after;
    }
    k.rates = agreement_rates(k.b_before, k.b_after, m.b);
    if (gold) {
      k.acc_pre = key_accuracy(pre, entries, spec, key.name);
      k.acc_post = key_accuracy(post, entries, spec, key.name);
    }
    m.keys.push_back(std::move(k));
  }
  return m;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> optional_from(const json& v) {
  return v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
}

json rates_json(const AgreementRates& r) {
  return {{"pre_ar", r.pre_ar}, {"post_ar", r.post_ar}, {"delta_ar", r.delta_ar}};
}

AgreementRates rates_from(const json& doc) {
  return {doc.at("pre_ar").get<double>(), doc.at("post_ar").get<double>(), doc.at("delta_ar").get<double>()};
}

}  // namespace

double key_score(const std::set<std::string>& pred, const std::set<std::string>& gold, std::size_t num_classes) {
  std::size_t differing = 0;
  for (const auto& c : pred) differing += gold.count(c) ? 0 : 1;
  for (const auto& c : gold) differing += pred.count(c) ? 0 : 1;
  return 1.0 - static_cast<double>(differing) / static_cast<double>(num_classes);
}

double multiclass_accuracy(const FinalLabels& final, const std::vector<TextEntry>& entries, const TaskSpec& spec) {
  if (entries.empty()) throw EmptyBatch();
  std::size_t hits = 0;
  for (const auto& e : entries) {
    const auto& gold = gold_of(e);
    const auto& pred = final_of(final, e);
    if (!pred) continue;
    bool equal = true;
    for (const auto& key : spec.keys) {
      if (codes_for(*pred, key.name) != codes_for(gold, key.name)) equal = false;
    }
    if (equal) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(entries.size());
}

double multilabel_accuracy(const FinalLabels& final, const std::vector<TextEntry>& entries, const TaskSpec& spec) {
  if (entries.empty()) throw EmptyBatch();
  double total = 0;
  for (const auto& e : entries) {
    const auto& gold = gold_of(e);
    const auto& pred = final_of(final, e);
    if (!pred) continue;
    double hamming = 0;
    for (const auto& key : spec.keys) {
      hamming += 1.0 - key_score(codes_for(*pred, key.name), codes_for(gold, key.name), key.codes.size());
    }
    total += 1.0 - hamming / static_cast<double>(spec.keys.size());
  }
  return total / static_cast<double>(entries.size());
}

double key_accuracy(const FinalLabels& final, const std::vector<TextEntry>& entries, const TaskSpec& spec,
                    const std::string& key_name) {
  if (entries.empty()) throw EmptyBatch();
  const auto& key = spec.key(key_name);
  double total = 0;
  for (const auto& e : entries) {
    const auto& gold = gold_of(e);
    const auto& pred = final_of(final, e);
    if (!pred) continue;
    const auto p = codes_for(*pred, key.name);
    const auto g = codes_for(gold, key.name);
    total += key.kind == TaskKind::MultiClass ? (p == g ? 1.0 : 0.0) : key_score(p, g, key.codes.size());
  }
  return total / static_cast<double>(entries.size());
}

AgreementRates agreement_rates(std::size_t b_before, std::size_t b_after, std::size_t b) {
  if (b == 0) throw EmptyBatch();
  if (b_before > b || b_after > b) throw DomainError("agreement counts exceed the batch size");
  AgreementRates r;
  r.pre_ar = static_cast<double>(b_before) / static_cast<double>(b);
  r.post_ar = static_cast<double>(b_after) / static_cast<double>(b);
  r.delta_ar = r.post_ar - r.pre_ar;
  return r;
}

AgreementRates agreement_rates(const std::set<std::string>& pre, const std::set<std::string>& post, std::size_t b) {
  return agreement_rates(pre.size(), post.size(), b);
}

std::optional<LabelAssignment> pre_discussion_label(const std::vector<Verdict>& round0) {
  if (judge(round0)) return round0.front().labels;
  Resolution unused = Resolution::Failed;
  return fallback_labels(round0, unused);
}

BatchMetrics batch_metrics(const AnnotationMatrix& matrix, const std::vector<DiscussionOutcome>& outcomes,
                           const std::vector<TextEntry>& batch, const TaskSpec& spec) {
  if (outcomes.size() != batch.size()) throw DomainError("batch_metrics: one outcome per entry required");
  return measure(matrix.batch_id, outcomes, batch, spec);
}

RunMetrics run_metrics(std::vector<BatchMetrics> batches, const std::vector<TextEntry>& entries,
                       const std::vector<DiscussionOutcome>& outcomes, const TaskSpec& spec) {
  RunMetrics r;
  r.batches = std::move(batches);
  r.total = measure("all", outcomes, entries, spec);
  return r;
}

json BatchMetrics::to_json() const {
  json keys_json = json::array();
  for (const auto& k : keys) {
    keys_json.push_back({{"key", k.key},
                         {"b_before", k.b_before},
                         {"b_after", k.b_after},
                         {"rates", rates_json(k.rates)},
                         {"acc_pre", optional_json(k.acc_pre)},
                         {"acc_post", optional_json(k.acc_post)}});
  }
  return {{"batch_id", batch_id},
          {"B", b},
          {"b_before", b_before},
          {"b_after", b_after},
          {"rates", rates_json(rates)},
          {"acc_pre", optional_json(acc_pre)},
          {"acc_post", optional_json(acc_post)},
          {"keys", keys_json}};
}

BatchMetrics BatchMetrics::from_json(const json& doc) {
  BatchMetrics m;
  m.batch_id = doc.at("batch_id").get<std::string>();
  m.b = doc.at("B").get<std::size_t>();
  m.b_before = doc.at("b_before").get<std::size_t>();
  m.b_after = doc.at("b_after").get<std::size_t>();
  m.rates = rates_from(doc.at("rates"));
  m.acc_pre = optional_from(doc.at("acc_pre"));
  m.acc_post = optional_from(doc.at("acc_post"));
  for (const auto& k : doc.at("keys")) {
    m.keys.push_back({k.at("key").get<std::string>(), k.at("b_before").get<std::size_t>(),
                      k.at("b_after").get<std::size_t>(), rates_from(k.at("rates")), optional_from(k.at("acc_pre")),
                      optional_from(k.at("acc_post"))});
  }
  return m;
}

json RunMetrics::to_json() const {
  json batches_json = json::array();
  for (const auto& b : batches) batches_json.push_back(b.to_json());
  return {{"batches", batches_json}, {"total", total.to_json()}};
}

RunMetrics RunMetrics::from_json(const json& doc) {
  RunMetrics r;
  for (const auto& b : doc.at("batches")) r.batches.push_back(BatchMetrics::from_json(b));
  r.total = BatchMetrics::from_json(doc.at("total"));
  return r;
}

Aggregate aggregate_runs(const std::vector<double>& samples) {
  if (samples.empty()) throw DomainError("aggregate_runs needs at least one sample");
  Aggregate a;
  a.n = samples.size();
  a.min = *std::min_element(samples.begin(), samples.end());
  a.max = *std::max_element(samples.begin(), samples.end());
  double sum = 0;
  for (double s : samples) sum += s;
  a.mean = sum / static_cast<double>(a.n);
  if (a.n > 1) {
    double sq = 0;
    for (double s : samples) sq += (s - a.mean) * (s - a.mean);
    a.std = std::sqrt(sq / static_cast<double>(a.n - 1));
  }
  // Rounding can push the mean a hair outside the sample range.
  a.mean = std::clamp(a.mean, a.min, a.max);
  return a;
}

std::vector<CsvRow> csv_rows(const TaskSpec& spec, const std::string& backbone, const std::string& strategy,
                             int n, int b, int k, const std::vector<RunMetrics>& runs) {
  if (runs.empty()) throw DomainError("csv_rows needs at least one run");
  std::vector<CsvRow> rows;
  for (std::size_t i = 0; i < spec.keys.size(); ++i) {
    CsvRow row;
    row.task = spec.keys.size() == 1 ? spec.task_id : spec.task_id + "-" + spec.keys[i].name;
    row.backbone = backbone;
    row.strategy = strategy;
    row.n = n;
    row.b = b;
    row.k = k;
    row.runs = static_cast<int>(runs.size());
    std::vector<double> pre, post, delta, acc_pre, acc_post;
    bool have_acc = true;
    for (const auto& r : runs) {
      const auto& km = r.total.keys.at(i);
      pre.push_back(km.rates.pre_ar);
      post.push_back(km.rates.post_ar);
      delta.push_back(km.rates.delta_ar);
      if (km.acc_pre && km.acc_post) {
        acc_pre.push_back(*km.acc_pre);
        acc_post.push_back(*km.acc_post);
      } else {
        have_acc = false;
      }
    }
    row.pre_ar = aggregate_runs(pre).mean;
    row.post_ar = aggregate_runs(post).mean;
    row.delta_ar = aggregate_runs(delta).mean;
    if (have_acc) {
      row.acc_pre = aggregate_runs(acc_pre).mean;
      row.acc_post = aggregate_runs(acc_post).mean;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string render_csv(const std::vector<CsvRow>& rows) {
  const auto num = [](double v) { return fmt::format("{:.6f}", v); };
  const auto opt = [&](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", r.task, r.backbone, r.strategy, r.n, r.b, r.k,
                       num(r.pre_ar), num(r.post_ar), num(r.delta_ar), opt(r.acc_pre), opt(r.acc_post), r.runs);
  }
  return out;
}

}  // namespace quorum
