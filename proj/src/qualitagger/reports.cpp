#include "qualitagger/reports.hpp"

#include <cstdio>
#include <iomanip>
#include <sstream>

#include "qualitagger/error.hpp"

namespace qtag::evalstat {

using nlohmann::json;

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "text") return ReportFormat::Text;
  if (name == "csv") return ReportFormat::Csv;
  throw UsageError("unknown format '" + std::string(name) + "' (expected json, text or csv)");
}

json to_json(const ConfusionCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"tn", c.tn}, {"fn", c.fn}};
}

json to_json(const EvalReport& r) {
  return {{"precision", r.precision}, {"recall", r.recall},   {"accuracy", r.accuracy},
          {"f1", r.f1},               {"mcc", r.mcc},         {"auc", r.auc},
          {"counts", to_json(r.counts)}, {"n", r.n},          {"threshold", r.threshold},
          {"degenerate", r.degenerate}};
}

json to_json(const MultiLabelReport& r) {
  return {{"hamming_loss", r.hamming_loss},
          {"micro_precision", r.micro_precision},
          {"micro_recall", r.micro_recall},
          {"micro_f1", r.micro_f1},
          {"at_least_one_match", r.at_least_one_match},
          {"n", r.n},
          {"label_universe", kQualityCount},
          {"degenerate", r.degenerate}};
}

json to_json(const ComparisonReport& r) {
  const auto& b = r.bootstrap;
  return {{"n", r.n},
          {"f1_a", r.f1_a},
          {"f1_b", r.f1_b},
          {"discordant", {{"b", r.discordant.b}, {"c", r.discordant.c}}},
          {"mcnemar_p", r.mcnemar_p},
          {"bootstrap",
           {{"iterations", b.f1_a.size()},
            {"ci_a", {b.ci_a.low, b.ci_a.high}},
            {"ci_b", {b.ci_b.low, b.ci_b.high}},
            {"ci_diff", {b.ci_diff.low, b.ci_diff.high}},
            {"significant", b.significant}}},
          {"t_stat", r.t_stat},
          {"t_p", r.t_p},
          {"cliffs_delta", r.cliffs_delta},
          {"magnitude", to_string(r.magnitude)}};
}

namespace {

std::string fixed(double v, int digits) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

std::string interval(const Interval& i) {
  return "[" + fixed(i.low, 4) + ", " + fixed(i.high, 4) + "]";
}

}  // namespace

std::string delta_cell(double delta, Magnitude m) {
  return fixed(delta, 4) + " (" + letter(m) + ")";
}

std::string format_text(const EvalReport& r, std::string_view label) {
  std::ostringstream os;
  os << std::left << std::setw(18) << "Label" << std::right;
  for (const char* h : {"Precision", "Recall", "Accuracy", "MCC", "F1 Score", "AUC"}) {
    os << std::setw(11) << h;
  }
  os << "\n" << std::left << std::setw(18) << label << std::right;
  for (double v : {r.precision, r.recall, r.accuracy, r.mcc, r.f1, r.auc}) {
    os << std::setw(11) << fixed(v, 4);
  }
  os << "\n\nn=" << r.n << " threshold=" << fixed(r.threshold, 2) << " tp=" << r.counts.tp
     << " fp=" << r.counts.fp << " tn=" << r.counts.tn << " fn=" << r.counts.fn << "\n";
  if (!r.degenerate.empty()) {
    os << "degenerate:";
    for (const auto& d : r.degenerate) os << ' ' << d;
    os << "\n";
  }
  return os.str();
}

std::string format_text(const MultiLabelReport& r, std::string_view label) {
  std::ostringstream os;
  os << std::left << std::setw(18) << "Model" << std::right << std::setw(14) << "Hamming Loss"
     << std::setw(12) << "Micro P" << std::setw(12) << "Micro R" << std::setw(12) << "Micro F1"
     << std::setw(24) << "At Least One Match" << "\n";
  os << std::left << std::setw(18) << label << std::right << std::setw(14)
     << fixed(r.hamming_loss, 4) << std::setw(12) << fixed(r.micro_precision, 4) << std::setw(12)
     << fixed(r.micro_recall, 4) << std::setw(12) << fixed(r.micro_f1, 4) << std::setw(23)
     << fixed(100.0 * r.at_least_one_match, 2) << "%\n";
  os << "\nn=" << r.n << "\n";
  if (!r.degenerate.empty()) {
    os << "degenerate:";
    for (const auto& d : r.degenerate) os << ' ' << d;
    os << "\n";
  }
  return os.str();
}

std::string format_text(std::span<const LabeledComparison> rows) {
  std::ostringstream os;
  os << std::left << std::setw(18) << "Quality" << std::right << std::setw(10) << "McNemar"
     << std::setw(20) << "Bootstrap CI (A)" << std::setw(20) << "Bootstrap CI (B)"
     << std::setw(11) << "Sig. Diff" << std::setw(11) << "t-stat" << std::setw(10) << "t p"
     << std::setw(16) << "Cliff's Delta" << "\n";
  for (const auto& [label, r] : rows) {
    os << std::left << std::setw(18) << label << std::right << std::setw(10)
       << fixed(r.mcnemar_p, 4) << std::setw(20) << interval(r.bootstrap.ci_a) << std::setw(20)
       << interval(r.bootstrap.ci_b) << std::setw(11)
       << (r.bootstrap.significant ? "Yes" : "No") << std::setw(11) << fixed(r.t_stat, 4)
       << std::setw(10) << fixed(r.t_p, 4) << std::setw(16)
       << delta_cell(r.cliffs_delta, r.magnitude) << "\n";
  }
  os << "\n";
  for (const auto& [label, r] : rows) {
    os << label << ": n=" << r.n << " f1_a=" << fixed(r.f1_a, 4) << " f1_b=" << fixed(r.f1_b, 4)
       << " b=" << r.discordant.b << " c=" << r.discordant.c
       << " diff_ci=" << interval(r.bootstrap.ci_diff) << "\n";
  }
  return os.str();
}

std::string format_text(const ComparisonReport& r, std::string_view label) {
  const LabeledComparison row{std::string(label), r};
  return format_text(std::span<const LabeledComparison>(&row, 1));
}

std::string format_csv(const EvalReport& r, std::string_view label) {
  std::ostringstream os;
  os << "label,precision,recall,accuracy,mcc,f1,auc,tp,fp,tn,fn,n,threshold\n";
  os << label << ',' << fixed(r.precision, 6) << ',' << fixed(r.recall, 6) << ','
     << fixed(r.accuracy, 6) << ',' << fixed(r.mcc, 6) << ',' << fixed(r.f1, 6) << ','
     << fixed(r.auc, 6) << ',' << r.counts.tp << ',' << r.counts.fp << ',' << r.counts.tn << ','
     << r.counts.fn << ',' << r.n << ',' << fixed(r.threshold, 6) << "\n";
  return os.str();
}

std::string format_csv(const MultiLabelReport& r, std::string_view label) {
  std::ostringstream os;
  os << "label,hamming_loss,micro_precision,micro_recall,micro_f1,at_least_one_match,n\n";
  os << label << ',' << fixed(r.hamming_loss, 6) << ',' << fixed(r.micro_precision, 6) << ','
     << fixed(r.micro_recall, 6) << ',' << fixed(r.micro_f1, 6) << ','
     << fixed(r.at_least_one_match, 6) << ',' << r.n << "\n";
  return os.str();
}

std::string format_csv(std::span<const LabeledComparison> rows) {
  std::ostringstream os;
  os << "label,n,f1_a,f1_b,b,c,mcnemar_p,ci_a_low,ci_a_high,ci_b_low,ci_b_high,ci_diff_low,"
        "ci_diff_high,significant,t_stat,t_p,cliffs_delta,magnitude\n";
  for (const auto& [label, r] : rows) {
    const auto& b = r.bootstrap;
    os << label << ',' << r.n << ',' << fixed(r.f1_a, 6) << ',' << fixed(r.f1_b, 6) << ','
       << r.discordant.b << ',' << r.discordant.c << ',' << fixed(r.mcnemar_p, 6) << ','
       << fixed(b.ci_a.low, 6) << ',' << fixed(b.ci_a.high, 6) << ',' << fixed(b.ci_b.low, 6)
       << ',' << fixed(b.ci_b.high, 6) << ',' << fixed(b.ci_diff.low, 6) << ','
       << fixed(b.ci_diff.high, 6) << ',' << (b.significant ? "true" : "false") << ','
       << fixed(r.t_stat, 6) << ',' << fixed(r.t_p, 6) << ',' << fixed(r.cliffs_delta, 6) << ','
       << to_string(r.magnitude) << "\n";
  }
  return os.str();
}

std::string format_csv(const ComparisonReport& r, std::string_view label) {
  const LabeledComparison row{std::string(label), r};
  return format_csv(std::span<const LabeledComparison>(&row, 1));
}

}  // namespace qtag::evalstat
