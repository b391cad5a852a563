#include "senf/results.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "io.hpp"
#include "senf/error.hpp"

namespace senf {

using nlohmann::json;

RecordKey key_of(const TrialRecord& r) {
  return {r.fuzzer, r.target, r.seed_set, r.trial};
}

std::optional<std::string> record_problem(const TrialRecord& r) {
  if (r.fuzzer.empty() || r.target.empty() || r.seed_set.empty())
    return "empty label";
  for (const auto* label : {&r.fuzzer, &r.target, &r.seed_set}) {
    if (label->find_first_of(",\n\r") != std::string::npos)
      return "label contains a comma or newline: " + *label;
  }
  if (r.trial < 0) return "negative trial index";
  if (!std::isfinite(r.cap_seconds) || r.cap_seconds <= 0.0)
    return "cap_seconds must be positive";
  if (r.found_at) {
    if (!std::isfinite(*r.found_at) || *r.found_at <= 0.0)
      return "found time must be positive";
    if (*r.found_at > r.cap_seconds) return "found time exceeds cap";
  }
  return std::nullopt;
}

ExperimentMatrix::ExperimentMatrix(std::vector<TrialRecord> records)
    : records_(std::move(records)) {
  std::stable_sort(records_.begin(), records_.end(),
                   [](const TrialRecord& a, const TrialRecord& b) {
                     return key_of(a) < key_of(b);
                   });
}

namespace {

template <class Proj>
std::vector<std::string> distinct(std::span<const TrialRecord> records, Proj proj) {
  std::set<std::string> s;
  for (const auto& r : records) s.insert(proj(r));
  return {s.begin(), s.end()};
}

}  // namespace

std::vector<std::string> ExperimentMatrix::fuzzers() const {
  return distinct(records_, [](const TrialRecord& r) { return r.fuzzer; });
}

std::vector<std::string> ExperimentMatrix::targets() const {
  return distinct(records_, [](const TrialRecord& r) { return r.target; });
}

std::vector<std::string> ExperimentMatrix::seed_sets() const {
  return distinct(records_, [](const TrialRecord& r) { return r.seed_set; });
}

std::vector<std::string> ExperimentMatrix::targets(const std::string& seed_set) const {
  std::set<std::string> s;
  for (const auto& r : records_)
    if (r.seed_set == seed_set) s.insert(r.target);
  return {s.begin(), s.end()};
}

std::vector<std::string> ExperimentMatrix::fuzzers_on(
    const std::string& target, const std::string& seed_set) const {
  std::set<std::string> s;
  for (const auto& r : records_)
    if (r.target == target && r.seed_set == seed_set) s.insert(r.fuzzer);
  return {s.begin(), s.end()};
}

std::vector<const TrialRecord*> ExperimentMatrix::group(const GroupKey& key) const {
  // Records are sorted by (fuzzer, target, seed_set, trial).
  RecordKey lo{key.fuzzer, key.target, key.seed_set, std::numeric_limits<int>::min()};
  auto it = std::lower_bound(
      records_.begin(), records_.end(), lo,
      [](const TrialRecord& r, const RecordKey& k) { return key_of(r) < k; });
  std::vector<const TrialRecord*> out;
  for (; it != records_.end() && it->fuzzer == key.fuzzer &&
         it->target == key.target && it->seed_set == key.seed_set;
       ++it)
    out.push_back(&*it);
  return out;
}

std::map<GroupKey, std::vector<const TrialRecord*>> ExperimentMatrix::groups() const {
  std::map<GroupKey, std::vector<const TrialRecord*>> out;
  for (const auto& r : records_) out[{r.fuzzer, r.target, r.seed_set}].push_back(&r);
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr const char* kCsvHeader =
    "fuzzer,target,seed_set,trial,found_at_seconds,cap_seconds";

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

std::optional<double> parse_real(const std::string& s) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

std::optional<int> parse_int(const std::string& s) {
  int v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty()) return std::nullopt;
  return v;
}

void reject_duplicates(const std::vector<TrialRecord>& records,
                       const std::vector<std::size_t>* lines) {
  std::map<RecordKey, std::size_t> seen;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto [it, inserted] = seen.emplace(key_of(records[i]), i);
    if (!inserted) {
      const auto& r = records[i];
      std::string where = lines ? "line " + std::to_string((*lines)[i]) + ": "
                                : "record " + std::to_string(i) + ": ";
      throw DuplicateKey(where + "duplicate key (" + r.fuzzer + ", " + r.target +
                         ", " + r.seed_set + ", " + std::to_string(r.trial) + ")");
    }
  }
}

}  // namespace

ExperimentMatrix parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<TrialRecord> records;
  std::vector<std::size_t> lines;

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
      if (line != kCsvHeader)
        throw SchemaError("header", "expected '" + std::string(kCsvHeader) + "'");
      have_header = true;
      continue;
    }
    if (line.empty()) continue;

    auto f = split(line, ',');
    if (f.size() != 6)
      throw MalformedRow(line_no, "expected 6 fields, got " + std::to_string(f.size()));
    TrialRecord r;
    r.fuzzer = f[0];
    r.target = f[1];
    r.seed_set = f[2];
    auto trial = parse_int(f[3]);
    if (!trial) throw MalformedRow(line_no, "trial is not an integer: '" + f[3] + "'");
    r.trial = *trial;
    if (f[4] != "NA") {
      auto t = parse_real(f[4]);
      if (!t) throw MalformedRow(line_no, "found_at_seconds is not a number or NA");
      r.found_at = *t;
    }
    auto cap = parse_real(f[5]);
    if (!cap) throw MalformedRow(line_no, "cap_seconds is not a number");
    r.cap_seconds = *cap;
    if (auto problem = record_problem(r)) throw MalformedRow(line_no, *problem);
    records.push_back(std::move(r));
    lines.push_back(line_no);
  }
  if (!have_header) throw SchemaError("header", "missing header row");
  reject_duplicates(records, &lines);
  return ExperimentMatrix(std::move(records));
}

ExperimentMatrix ingest_csv(const std::filesystem::path& path) {
  return parse_csv(io::read_text(path));
}

std::string to_csv_string(const ExperimentMatrix& matrix) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& r : matrix.records()) {
    out += r.fuzzer + ',' + r.target + ',' + r.seed_set + ',' +
           std::to_string(r.trial) + ',' +
           (r.found_at ? io::format_double(*r.found_at) : std::string("NA")) + ',' +
           io::format_double(r.cap_seconds) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

const json& require(const json& obj, const std::string& where, const char* field) {
  auto it = obj.find(field);
  if (it == obj.end()) throw SchemaError(where + "." + field, "missing field");
  return *it;
}

std::string require_string(const json& obj, const std::string& where, const char* field) {
  const auto& v = require(obj, where, field);
  if (!v.is_string()) throw SchemaError(where + "." + field, "expected a string");
  return v.get<std::string>();
}

double require_number(const json& obj, const std::string& where, const char* field) {
  const auto& v = require(obj, where, field);
  if (!v.is_number()) throw SchemaError(where + "." + field, "expected a number");
  return v.get<double>();
}

TrialRecord record_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where, "expected an object");
  TrialRecord r;
  r.fuzzer = require_string(j, where, "fuzzer");
  r.target = require_string(j, where, "target");
  r.seed_set = require_string(j, where, "seed_set");
  const auto& trial = require(j, where, "trial");
  if (!trial.is_number_integer() || trial.get<long long>() < 0 ||
      trial.get<long long>() > std::numeric_limits<int>::max())
    throw SchemaError(where + ".trial", "expected a non-negative integer");
  r.trial = trial.get<int>();
  auto outcome = require_string(j, where, "outcome");
  bool has_time = j.contains("found_at_seconds");
  if (outcome == "found") {
    if (!has_time) throw SchemaError(where + ".found_at_seconds", "missing field");
    r.found_at = require_number(j, where, "found_at_seconds");
  } else if (outcome == "not_found") {
    if (has_time)
      throw SchemaError(where + ".found_at_seconds", "present on a not_found record");
  } else {
    throw SchemaError(where + ".outcome", "expected \"found\" or \"not_found\"");
  }
  r.cap_seconds = require_number(j, where, "cap_seconds");
  if (auto problem = record_problem(r)) throw SchemaError(where, *problem);
  return r;
}

}  // namespace

ExperimentMatrix parse_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("", std::string("invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("", "top level must be an object");
  auto it = doc.find("records");
  if (it == doc.end()) throw SchemaError("records", "missing field");
  if (!it->is_array()) throw SchemaError("records", "expected an array");
  std::vector<TrialRecord> records;
  records.reserve(it->size());
  for (std::size_t i = 0; i < it->size(); ++i)
    records.push_back(record_from_json((*it)[i], "records[" + std::to_string(i) + "]"));
  reject_duplicates(records, nullptr);
  return ExperimentMatrix(std::move(records));
}

ExperimentMatrix ingest_json(const std::filesystem::path& path) {
  return parse_json(io::read_text(path));
}

std::string to_json_string(const ExperimentMatrix& matrix) {
  json records = json::array();
  for (const auto& r : matrix.records()) {
    json j = {{"fuzzer", r.fuzzer},
              {"target", r.target},
              {"seed_set", r.seed_set},
              {"trial", r.trial},
              {"outcome", r.found() ? "found" : "not_found"}};
    if (r.found_at) j["found_at_seconds"] = *r.found_at;
    j["cap_seconds"] = r.cap_seconds;
    records.push_back(std::move(j));
  }
  json doc = {{"records", std::move(records)}};
  return doc.dump(1) + "\n";
}

void save(const ExperimentMatrix& matrix, const std::filesystem::path& path) {
  io::write_text_atomic(path, to_json_string(matrix));
}

ExperimentMatrix load(const std::filesystem::path& path) {
  return parse_json(io::read_text(path));
}

// ---------------------------------------------------------------------------
// Validation

const char* to_string(IssueKind kind) {
  switch (kind) {
    case IssueKind::duplicate_key: return "DuplicateKey";
    case IssueKind::invalid_record: return "InvalidRecord";
    case IssueKind::mixed_cap: return "MixedCap";
    case IssueKind::missing_fuzzer: return "MissingFuzzer";
    case IssueKind::unequal_trials: return "UnequalTrials";
    case IssueKind::few_trials: return "FewTrials";
  }
  return "?";
}

const char* to_string(Severity severity) {
  return severity == Severity::error ? "error" : "warning";
}

bool ValidationReport::has_errors() const {
  return std::any_of(issues.begin(), issues.end(),
                     [](const auto& i) { return i.severity == Severity::error; });
}

std::size_t ValidationReport::count(IssueKind kind) const {
  return static_cast<std::size_t>(std::count_if(
      issues.begin(), issues.end(), [&](const auto& i) { return i.kind == kind; }));
}

ValidationReport validate(const ExperimentMatrix& matrix) {
  ValidationReport report;
  auto add = [&](Severity s, IssueKind k, std::string msg) {
    report.issues.push_back({s, k, std::move(msg)});
  };

  const auto records = matrix.records();
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (auto problem = record_problem(records[i]))
      add(Severity::error, IssueKind::invalid_record,
          "record " + std::to_string(i) + ": " + *problem);
    if (i > 0 && key_of(records[i]) == key_of(records[i - 1]) &&
        (i < 2 || key_of(records[i - 1]) != key_of(records[i - 2])))
      add(Severity::error, IssueKind::duplicate_key,
          "duplicate key (" + records[i].fuzzer + ", " + records[i].target + ", " +
              records[i].seed_set + ", " + std::to_string(records[i].trial) + ")");
  }

  // (target, seed_set) -> fuzzer -> trial count
  std::map<std::pair<std::string, std::string>, std::map<std::string, std::size_t>> counts;
  std::map<std::string, std::set<std::string>> fuzzers_in_seed;
  for (const auto& [key, group] : matrix.groups()) {
    counts[{key.target, key.seed_set}][key.fuzzer] = group.size();
    fuzzers_in_seed[key.seed_set].insert(key.fuzzer);
    std::string name = key.fuzzer + "/" + key.target + "/" + key.seed_set;
    bool mixed = std::any_of(group.begin(), group.end(), [&](const TrialRecord* r) {
      return r->cap_seconds != group.front()->cap_seconds;
    });
    if (mixed)
      add(Severity::error, IssueKind::mixed_cap, name + ": trials use different caps");
    if (group.size() < static_cast<std::size_t>(kRecommendedTrials))
      add(Severity::warning, IssueKind::few_trials,
          name + ": " + std::to_string(group.size()) + " trials (fewer than " +
              std::to_string(kRecommendedTrials) + ")");
  }

  for (const auto& [ts, per_fuzzer] : counts) {
    const auto& [target, seed_set] = ts;
    for (const auto& f : fuzzers_in_seed[seed_set]) {
      if (!per_fuzzer.contains(f))
        add(Severity::warning, IssueKind::missing_fuzzer,
            f + " has no trials on " + target + "/" + seed_set);
    }
    auto [lo, hi] = std::minmax_element(
        per_fuzzer.begin(), per_fuzzer.end(),
        [](const auto& a, const auto& b) { return a.second < b.second; });
    if (lo->second != hi->second)
      add(Severity::warning, IssueKind::unequal_trials,
          target + "/" + seed_set + ": trial counts range from " +
              std::to_string(lo->second) + " (" + lo->first + ") to " +
              std::to_string(hi->second) + " (" + hi->first + ")");
  }
  return report;
}

}  // namespace senf
