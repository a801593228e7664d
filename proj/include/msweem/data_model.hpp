#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace msweem {

enum class Qualification { master, normal, unknown };

std::string to_string(Qualification q);
Qualification qualification_from_string(const std::string& s);

struct TextUnit {
    std::string text_id;
    std::string text;
};

// One annotator's labels for one text, with the behavioral metadata
// captured at annotation time (raw worktime in seconds, raw throughput
// as total tasks completed by this annotator).
struct AnnotationRecord {
    std::string text_id;
    std::string annotator_id;
    std::map<std::string, int> labels;
    double worktime_s = 0.0;
    std::int64_t annotator_throughput = 0;
    Qualification qualification = Qualification::unknown;
};

struct LabelSchema {
    std::string target;
    std::vector<std::string> auxiliary;  // ordered; defines encoding slots

    bool declares(const std::string& name) const;
};

class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<TextUnit> texts, std::vector<AnnotationRecord> records,
            LabelSchema schema, std::map<std::string, int> gold = {});

    const std::vector<TextUnit>& texts() const { return texts_; }
    const std::vector<AnnotationRecord>& records() const { return records_; }
    const LabelSchema& schema() const { return schema_; }
    const std::map<std::string, int>& gold() const { return gold_; }

    std::size_t n_texts() const { return texts_.size(); }
    std::size_t aux_count() const { return schema_.auxiliary.size(); }

    bool has_text(const std::string& text_id) const;
    const TextUnit& text(const std::string& text_id) const;

    // Records of one text, in insertion order.
    const std::vector<std::size_t>& record_indices(const std::string& text_id) const;

    // Majority-vote value of a label across a text's annotators; modal ties
    // resolve toward the lower label value. For the target label, a gold
    // value takes precedence when present.
    int label_value(const std::string& text_id, const std::string& label) const;

    // Annotation-preferring variant: the majority vote of per-annotator
    // labels when any exist, falling back to gold for the target. This is
    // the value visible at training time (gold stays held out for scoring).
    int observed_value(const std::string& text_id, const std::string& label) const;

    // True when any record annotates `label`.
    bool label_annotated(const std::string& label) const;

    // Subset containing exactly the given texts (order preserved as given).
    Dataset subset(const std::vector<std::string>& text_ids) const;

private:
    std::vector<TextUnit> texts_;
    std::vector<AnnotationRecord> records_;
    LabelSchema schema_;
    std::map<std::string, int> gold_;
    std::unordered_map<std::string, std::size_t> text_index_;
    std::unordered_map<std::string, std::vector<std::size_t>> records_by_text_;

    void validate_and_index();
};

struct SplitSpec {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
    std::uint64_t seed = 1;
};

struct SplitResult {
    Dataset train;
    Dataset val;
    Dataset test;
    std::vector<std::string> warnings;
};

struct IngestIssue {
    std::size_t line = 0;
    std::string message;
};

struct IngestSchema {
    std::string target;                  // which label_<name> column is the target
    std::vector<std::string> auxiliary;  // empty: derive from remaining label_ columns
};

// Reads the canonical annotation table. Malformed rows are skipped and
// reported with their line numbers; structural problems (missing columns)
// throw SchemaError.
Dataset ingest_dataset(const std::string& path, const IngestSchema& schema,
                       std::vector<IngestIssue>* issues = nullptr);

// Canonical on-disk form; ingest(write(d)) == d.
void write_dataset(const Dataset& dataset, const std::string& path);

// Min-max scaling to [0,1]; a constant input maps every value to 0.5 so a
// degenerate column becomes a neutral weight instead of annihilating the
// encodings it multiplies.
std::vector<double> minmax_normalize(const std::vector<double>& values);
double minmax_scale(double x, double lo, double hi);

SplitResult stratified_split(const Dataset& dataset, const SplitSpec& spec,
                             const std::string& strat_label);

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace msweem
