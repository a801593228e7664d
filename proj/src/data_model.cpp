#include "msweem/data_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "msweem/csv.hpp"
#include "msweem/error.hpp"
#include "msweem/rng.hpp"
#include "msweem/stats.hpp"

namespace msweem {

std::string to_string(Qualification q) {
    switch (q) {
        case Qualification::master: return "master";
        case Qualification::normal: return "normal";
        case Qualification::unknown: return "unknown";
    }
    return "unknown";
}

Qualification qualification_from_string(const std::string& s) {
    if (s == "master") return Qualification::master;
    if (s == "normal") return Qualification::normal;
    if (s.empty() || s == "unknown") return Qualification::unknown;
    throw ArgumentError("unrecognized qualification: " + s);
}

bool LabelSchema::declares(const std::string& name) const {
    if (name == target) return true;
    return std::find(auxiliary.begin(), auxiliary.end(), name) != auxiliary.end();
}

Dataset::Dataset(std::vector<TextUnit> texts, std::vector<AnnotationRecord> records,
                 LabelSchema schema, std::map<std::string, int> gold)
    : texts_(std::move(texts)),
      records_(std::move(records)),
      schema_(std::move(schema)),
      gold_(std::move(gold)) {
    validate_and_index();
}

void Dataset::validate_and_index() {
    if (schema_.auxiliary.empty())
        throw ArgumentError("dataset schema declares no auxiliary labels");
    if (schema_.target.empty())
        throw ArgumentError("dataset schema declares no target label");

    text_index_.clear();
    records_by_text_.clear();
    for (std::size_t i = 0; i < texts_.size(); ++i) {
        const auto& t = texts_[i];
        if (t.text.empty()) throw ArgumentError("empty text for text_id " + t.text_id);
        if (!text_index_.emplace(t.text_id, i).second)
            throw ArgumentError("duplicate text_id: " + t.text_id);
    }
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        if (!text_index_.count(r.text_id))
            throw ArgumentError("record references unknown text_id: " + r.text_id);
        if (!(r.worktime_s > 0.0))
            throw ArgumentError("worktime_s must be > 0 for text_id " + r.text_id);
        if (r.annotator_throughput < 1)
            throw ArgumentError("annotator_throughput must be >= 1 for text_id " + r.text_id);
        for (const auto& [name, value] : r.labels) {
            (void)value;
            if (!schema_.declares(name))
                throw ArgumentError("label '" + name + "' not declared in schema");
        }
        records_by_text_[r.text_id].push_back(i);
    }
    for (const auto& t : texts_) {
        if (!records_by_text_.count(t.text_id))
            throw ArgumentError("text has no annotation records: " + t.text_id);
    }
    for (const auto& [id, value] : gold_) {
        (void)value;
        if (!text_index_.count(id))
            throw ArgumentError("gold value for unknown text_id: " + id);
    }
}

bool Dataset::has_text(const std::string& text_id) const {
    return text_index_.count(text_id) > 0;
}

const TextUnit& Dataset::text(const std::string& text_id) const {
    auto it = text_index_.find(text_id);
    if (it == text_index_.end()) throw ArgumentError("unknown text_id: " + text_id);
    return texts_[it->second];
}

const std::vector<std::size_t>& Dataset::record_indices(const std::string& text_id) const {
    auto it = records_by_text_.find(text_id);
    if (it == records_by_text_.end()) throw ArgumentError("unknown text_id: " + text_id);
    return it->second;
}

namespace {

// Majority vote with modal ties resolved toward the lower value; -1 when the
// label is entirely unannotated for this text.
int vote_or_missing(const std::vector<AnnotationRecord>& records,
                    const std::vector<std::size_t>& indices, const std::string& label) {
    std::map<int, int> counts;
    for (std::size_t ri : indices) {
        auto it = records[ri].labels.find(label);
        if (it != records[ri].labels.end()) ++counts[it->second];
    }
    if (counts.empty()) return -1;
    int best_value = counts.begin()->first;
    int best_count = counts.begin()->second;
    for (const auto& [value, count] : counts) {
        if (count > best_count) {
            best_value = value;
            best_count = count;
        }
    }
    return best_value;
}

}  // namespace

int Dataset::label_value(const std::string& text_id, const std::string& label) const {
    if (label == schema_.target) {
        auto g = gold_.find(text_id);
        if (g != gold_.end()) return g->second;
    }
    const int voted = vote_or_missing(records_, record_indices(text_id), label);
    if (voted < 0)
        throw ArgumentError("no value for label '" + label + "' on text " + text_id);
    return voted;
}

int Dataset::observed_value(const std::string& text_id, const std::string& label) const {
    const int voted = vote_or_missing(records_, record_indices(text_id), label);
    if (voted >= 0) return voted;
    if (label == schema_.target) {
        auto g = gold_.find(text_id);
        if (g != gold_.end()) return g->second;
    }
    throw ArgumentError("no value for label '" + label + "' on text " + text_id);
}

bool Dataset::label_annotated(const std::string& label) const {
    for (const auto& r : records_) {
        if (r.labels.count(label)) return true;
    }
    return false;
}

Dataset Dataset::subset(const std::vector<std::string>& text_ids) const {
    std::set<std::string> wanted(text_ids.begin(), text_ids.end());
    std::vector<TextUnit> texts;
    std::vector<AnnotationRecord> records;
    std::map<std::string, int> gold;
    for (const auto& t : texts_) {
        if (!wanted.count(t.text_id)) continue;
        texts.push_back(t);
        for (std::size_t ri : record_indices(t.text_id)) records.push_back(records_[ri]);
        auto g = gold_.find(t.text_id);
        if (g != gold_.end()) gold.emplace(*g);
    }
    return Dataset(std::move(texts), std::move(records), schema_, std::move(gold));
}

namespace {

constexpr const char* kBaseColumns[] = {"text_id",    "text",
                                        "annotator_id", "worktime_s",
                                        "annotator_throughput", "qualification"};

bool parse_double(const std::string& s, double& out) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool parse_int(const std::string& s, std::int64_t& out) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end;
}

// Line-delimited alternative to the CSV table: one JSON object per line with
// the same field names. Converted into a Table so both formats share the
// ingestion pipeline.
csv::Table read_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ArgumentError("cannot open file: " + path);
    csv::Table table;
    std::unordered_map<std::string, std::size_t> column_of;
    auto column_index = [&](const std::string& name) {
        auto it = column_of.find(name);
        if (it != column_of.end()) return it->second;
        column_of.emplace(name, table.header.size());
        table.header.push_back(name);
        return table.header.size() - 1;
    };
    for (const char* name : kBaseColumns) column_index(name);

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object())
            throw SchemaError("line " + std::to_string(line_no) + ": expected an object");
        csv::Row row;
        row.line = line_no;
        for (const auto& [key, value] : j.items()) {
            const std::size_t col = column_index(key);
            if (row.fields.size() <= col) row.fields.resize(col + 1);
            if (value.is_string())
                row.fields[col] = value.get<std::string>();
            else if (value.is_number_integer())
                row.fields[col] = std::to_string(value.get<std::int64_t>());
            else if (value.is_number_float())
                row.fields[col] = csv::format_double(value.get<double>());
            else if (!value.is_null())
                throw SchemaError("line " + std::to_string(line_no) + ": field '" + key +
                                  "' has an unsupported type");
        }
        table.rows.push_back(std::move(row));
    }
    // Pad rows to the final header width so the field-count check passes.
    for (auto& row : table.rows) row.fields.resize(table.header.size());
    return table;
}

bool looks_like_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    char c;
    while (in.get(c)) {
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') continue;
        return c == '{';
    }
    return false;
}

}  // namespace

Dataset ingest_dataset(const std::string& path, const IngestSchema& schema,
                       std::vector<IngestIssue>* issues) {
    if (schema.target.empty()) throw ArgumentError("ingest schema: target label required");
    const csv::Table table = looks_like_jsonl(path) ? read_jsonl(path) : csv::read_file(path);
    if (table.header.empty()) throw SchemaError("empty input table: " + path);

    std::vector<int> base_cols;
    for (const char* name : kBaseColumns) {
        const int idx = table.column(name);
        if (idx < 0) throw SchemaError(std::string("missing column: ") + name);
        base_cols.push_back(idx);
    }

    // Label columns in header order; the target's label column may be absent
    // when targets come pre-aggregated in a gold column.
    std::vector<std::pair<std::string, int>> label_cols;
    int gold_col = -1;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        const std::string& h = table.header[i];
        if (h.rfind("label_", 0) == 0) {
            label_cols.emplace_back(h.substr(6), static_cast<int>(i));
        } else if (h.rfind("gold_", 0) == 0) {
            if (h.substr(5) != schema.target)
                throw SchemaError("gold column '" + h + "' does not match target '" +
                                  schema.target + "'");
            gold_col = static_cast<int>(i);
        }
    }

    std::vector<std::string> aux = schema.auxiliary;
    if (aux.empty()) {
        for (const auto& [name, col] : label_cols) {
            (void)col;
            if (name != schema.target) aux.push_back(name);
        }
    } else {
        for (const auto& name : aux) {
            bool found = false;
            for (const auto& [lname, col] : label_cols) {
                (void)col;
                if (lname == name) found = true;
            }
            if (!found) throw SchemaError("missing column: label_" + name);
        }
    }
    if (aux.empty()) throw SchemaError("no auxiliary label columns (label_<name>) found");

    const bool target_annotated = std::any_of(
        label_cols.begin(), label_cols.end(),
        [&](const auto& lc) { return lc.first == schema.target; });
    if (!target_annotated && gold_col < 0)
        throw SchemaError("target '" + schema.target +
                          "' has neither a label_ column nor a gold_ column");

    std::vector<IngestIssue> local_issues;
    auto report = [&](std::size_t line, const std::string& msg) {
        local_issues.push_back({line, msg});
    };

    std::vector<TextUnit> texts;
    std::vector<AnnotationRecord> records;
    std::map<std::string, int> gold;
    std::unordered_map<std::string, std::string> text_of_id;

    for (const auto& row : table.rows) {
        if (row.fields.size() != table.header.size()) {
            report(row.line, "expected " + std::to_string(table.header.size()) +
                                 " fields, got " + std::to_string(row.fields.size()));
            continue;
        }
        AnnotationRecord rec;
        rec.text_id = row.fields[base_cols[0]];
        const std::string& text = row.fields[base_cols[1]];
        rec.annotator_id = row.fields[base_cols[2]];

        if (rec.text_id.empty()) {
            report(row.line, "empty text_id");
            continue;
        }
        if (text.empty()) {
            report(row.line, "empty text");
            continue;
        }
        if (!parse_double(row.fields[base_cols[3]], rec.worktime_s) || rec.worktime_s <= 0.0) {
            report(row.line, "non-numeric or non-positive worktime_s: '" +
                                 row.fields[base_cols[3]] + "'");
            continue;
        }
        if (!parse_int(row.fields[base_cols[4]], rec.annotator_throughput) ||
            rec.annotator_throughput < 1) {
            report(row.line, "non-numeric or < 1 annotator_throughput: '" +
                                 row.fields[base_cols[4]] + "'");
            continue;
        }
        try {
            rec.qualification = qualification_from_string(row.fields[base_cols[5]]);
        } catch (const ArgumentError& e) {
            report(row.line, e.what());
            continue;
        }

        bool row_ok = true;
        for (const auto& [name, col] : label_cols) {
            if (name != schema.target &&
                std::find(aux.begin(), aux.end(), name) == aux.end())
                continue;  // undeclared label column, ignore
            const std::string& cell = row.fields[col];
            if (cell.empty()) continue;  // this record does not label this name
            std::int64_t v = 0;
            if (!parse_int(cell, v)) {
                report(row.line, "non-integer value for label_" + name + ": '" + cell + "'");
                row_ok = false;
                break;
            }
            rec.labels[name] = static_cast<int>(v);
        }
        if (!row_ok) continue;

        if (gold_col >= 0 && !row.fields[gold_col].empty()) {
            std::int64_t g = 0;
            if (!parse_int(row.fields[gold_col], g)) {
                report(row.line, "non-integer gold value: '" + row.fields[gold_col] + "'");
                continue;
            }
            auto it = gold.find(rec.text_id);
            if (it != gold.end() && it->second != static_cast<int>(g)) {
                report(row.line, "conflicting gold values for text_id " + rec.text_id);
                continue;
            }
            gold[rec.text_id] = static_cast<int>(g);
        }

        auto seen = text_of_id.find(rec.text_id);
        if (seen == text_of_id.end()) {
            text_of_id.emplace(rec.text_id, text);
            texts.push_back({rec.text_id, text});
        } else if (seen->second != text) {
            report(row.line, "text mismatch for text_id " + rec.text_id);
            continue;
        }
        records.push_back(std::move(rec));
    }

    // Drop texts whose every record was malformed.
    std::set<std::string> with_records;
    for (const auto& r : records) with_records.insert(r.text_id);
    std::erase_if(texts, [&](const TextUnit& t) {
        if (with_records.count(t.text_id)) return false;
        report(0, "text " + t.text_id + " dropped: no valid records");
        return true;
    });
    std::erase_if(gold, [&](const auto& kv) { return !with_records.count(kv.first); });

    if (issues) *issues = std::move(local_issues);
    LabelSchema out_schema{schema.target, aux};
    return Dataset(std::move(texts), std::move(records), std::move(out_schema),
                   std::move(gold));
}

void write_dataset(const Dataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ArgumentError("cannot open for writing: " + path);

    const auto& schema = dataset.schema();
    const bool target_annotated = dataset.label_annotated(schema.target);
    const bool has_gold = !dataset.gold().empty();

    std::vector<std::string> header = {"text_id", "text", "annotator_id", "worktime_s",
                                       "annotator_throughput", "qualification"};
    for (const auto& a : schema.auxiliary) header.push_back("label_" + a);
    if (target_annotated) header.push_back("label_" + schema.target);
    if (has_gold) header.push_back("gold_" + schema.target);
    csv::write_row(out, header);

    for (const auto& t : dataset.texts()) {
        for (std::size_t ri : dataset.record_indices(t.text_id)) {
            const auto& r = dataset.records()[ri];
            std::vector<std::string> row = {r.text_id,
                                            t.text,
                                            r.annotator_id,
                                            csv::format_double(r.worktime_s),
                                            std::to_string(r.annotator_throughput),
                                            to_string(r.qualification)};
            auto cell_for = [&](const std::string& name) {
                auto it = r.labels.find(name);
                return it == r.labels.end() ? std::string() : std::to_string(it->second);
            };
            for (const auto& a : schema.auxiliary) row.push_back(cell_for(a));
            if (target_annotated) row.push_back(cell_for(schema.target));
            if (has_gold) {
                auto g = dataset.gold().find(t.text_id);
                row.push_back(g == dataset.gold().end() ? std::string()
                                                        : std::to_string(g->second));
            }
            csv::write_row(out, row);
        }
    }
}

std::vector<double> minmax_normalize(const std::vector<double>& values) {
    if (values.empty()) throw ArgumentError("minmax_normalize: empty input");
    double lo = values[0], hi = values[0];
    for (double v : values) {
        if (!std::isfinite(v)) throw ArgumentError("minmax_normalize: non-finite value");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    std::vector<double> out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        out[i] = minmax_scale(values[i], lo, hi);
    return out;
}

double minmax_scale(double x, double lo, double hi) {
    if (!std::isfinite(x) || !std::isfinite(lo) || !std::isfinite(hi))
        throw ArgumentError("minmax_scale: non-finite value");
    if (lo > hi) throw ArgumentError("minmax_scale: lo > hi");
    if (lo == hi) return 0.5;  // constant column: neutral weight
    return (x - lo) / (hi - lo);
}

SplitResult stratified_split(const Dataset& dataset, const SplitSpec& spec,
                             const std::string& strat_label) {
    const double ratios[3] = {spec.train, spec.val, spec.test};
    for (double r : ratios) {
        if (!(r > 0.0) || !(r < 1.0))
            throw ArgumentError("split ratios must each lie in (0,1)");
    }
    if (std::fabs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9)
        throw ArgumentError("split ratios must sum to 1");

    // Group text ids by stratification class (majority-vote value; gold only
    // backs the target when no annotator labeled it).
    std::map<int, std::vector<std::string>> by_class;
    for (const auto& t : dataset.texts())
        by_class[dataset.observed_value(t.text_id, strat_label)].push_back(t.text_id);

    SplitResult result;
    std::vector<std::string> split_ids[3];
    Rng rng(spec.seed);

    for (auto& [cls, ids] : by_class) {
        rng.shuffle(ids);
        const std::size_t n = ids.size();
        if (n < 3) {
            result.warnings.push_back("class " + std::to_string(cls) + " has " +
                                      std::to_string(n) +
                                      " members (< number of splits); placed in train");
            for (auto& id : ids) split_ids[0].push_back(std::move(id));
            continue;
        }
        // Largest-remainder allocation keeps every split within one
        // observation of the exact proportional count.
        std::size_t counts[3];
        double remainders[3];
        std::size_t assigned = 0;
        for (int s = 0; s < 3; ++s) {
            const double exact = static_cast<double>(n) * ratios[s];
            counts[s] = static_cast<std::size_t>(std::floor(exact));
            remainders[s] = exact - std::floor(exact);
            assigned += counts[s];
        }
        int order[3] = {0, 1, 2};
        std::sort(order, order + 3, [&](int a, int b) {
            if (remainders[a] != remainders[b]) return remainders[a] > remainders[b];
            return a < b;
        });
        for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];

        std::size_t pos = 0;
        for (int s = 0; s < 3; ++s) {
            if (counts[s] == 0)
                result.warnings.push_back("class " + std::to_string(cls) +
                                          " absent from split " + std::to_string(s));
            for (std::size_t k = 0; k < counts[s]; ++k)
                split_ids[s].push_back(ids[pos++]);
        }
    }

    // Restore original text order inside each split for determinism that is
    // independent of class iteration order.
    std::unordered_map<std::string, std::size_t> order_of;
    for (std::size_t i = 0; i < dataset.texts().size(); ++i)
        order_of[dataset.texts()[i].text_id] = i;
    for (auto& ids : split_ids)
        std::sort(ids.begin(), ids.end(),
                  [&](const std::string& a, const std::string& b) {
                      return order_of[a] < order_of[b];
                  });

    result.train = dataset.subset(split_ids[0]);
    result.val = dataset.subset(split_ids[1]);
    result.test = dataset.subset(split_ids[2]);
    return result;
}

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ArgumentError("pearson_correlation: length mismatch");
    if (x.size() < 3) throw ArgumentError("pearson_correlation: need >= 3 points");
    const double mx = stats::mean(x);
    const double my = stats::mean(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw DegenerateError("pearson_correlation: zero variance input");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace msweem
