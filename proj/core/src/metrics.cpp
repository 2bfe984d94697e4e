#include "lgre/metrics.hpp"

#include <cmath>

#include "json.hpp"

namespace lgre {

MetricSummary summarize(std::span<const std::size_t> ranks) {
  MetricSummary s;
  s.count = ranks.size();
  if (ranks.empty()) return s;
  for (std::size_t r : ranks) {
    s.mrr += 1.0 / static_cast<double>(r);
    s.hits1 += r <= 1 ? 1.0 : 0.0;
    s.hits3 += r <= 3 ? 1.0 : 0.0;
    s.hits10 += r <= 10 ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(ranks.size());
  s.mrr /= n;
  s.hits1 /= n;
  s.hits3 /= n;
  s.hits10 /= n;
  return s;
}

std::size_t pessimistic_rank(std::span<const double> scores, Index gold, std::span<const Index> filtered) {
  const double target = scores[static_cast<std::size_t>(gold)];
  if (!std::isfinite(target)) return scores.size();
  std::size_t better = 0;
  for (std::size_t e = 0; e < scores.size(); ++e) {
    if (static_cast<Index>(e) != gold && scores[e] >= target) ++better;
  }
  for (Index e : filtered) {
    if (e != gold && scores[static_cast<std::size_t>(e)] >= target) --better;
  }
  return better + 1;
}

void finalize_report(RankReport& report) {
  std::vector<std::size_t> obj, subj;
  for (std::size_t i = 0; i < report.ranks.size(); ++i) {
    (report.queries[i].inverse ? subj : obj).push_back(report.ranks[i]);
  }
  report.overall = summarize(report.ranks);
  report.object = summarize(obj);
  report.subject = summarize(subj);
}

namespace {
nlohmann::json summary_json(const MetricSummary& s) {
  return {{"count", s.count}, {"mrr", s.mrr}, {"hits1", s.hits1}, {"hits3", s.hits3}, {"hits10", s.hits10}};
}
}  // namespace

std::string report_json(const RankReport& report) {
  nlohmann::json j;
  j["split"] = report.split;
  j["filter"] = to_string(report.filter);
  j["overall"] = summary_json(report.overall);
  j["object"] = summary_json(report.object);
  j["subject"] = summary_json(report.subject);
  return j.dump(2);
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string ranks_csv(const RankReport& report, const Dataset& dataset) {
  const auto num_rel = static_cast<Index>(dataset.num_relations());
  std::string out = "subject,relation,object,timestamp,direction,rank\n";
  for (std::size_t i = 0; i < report.queries.size(); ++i) {
    const Quadruple& q = report.queries[i];
    const Index rel = q.inverse ? q.r - num_rel : q.r;
    out += csv_field(dataset.vocab.entity.name(q.s)) + "," +
           csv_field(dataset.vocab.relation.name(rel) + (q.inverse ? "^-1" : "")) + "," +
           csv_field(dataset.vocab.entity.name(q.o)) + "," + dataset.vocab.timestamp.name(q.t) + "," +
           (q.inverse ? "subject" : "object") + "," + std::to_string(report.ranks[i]) + "\n";
  }
  return out;
}

}  // namespace lgre
