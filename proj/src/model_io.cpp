#include "narx/model_io.hpp"
#include "narx/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace narx {

using ordered_json = nlohmann::ordered_json;

namespace {

ordered_json vector_to_json(const Eigen::VectorXd& v) {
    ordered_json arr = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Eigen::VectorXd vector_from_json(const ordered_json& arr, const char* what) {
    if (!arr.is_array())
        throw DataError(std::string("model file: ") + what +
                        " must be an array");
    Eigen::VectorXd v(static_cast<Eigen::Index>(arr.size()));
    Eigen::Index i = 0;
    for (const auto& item : arr) {
        if (!item.is_number())
            throw DataError(std::string("model file: ") + what +
                            " holds a non-numeric entry");
        v(i++) = item.get<double>();
    }
    return v;
}

const ordered_json& require(const ordered_json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end())
        throw DataError(std::string("model file: missing key '") + key + "'");
    return *it;
}

} // namespace

std::string model_to_json(const MultinomialNarxClassifier& clf,
                          const ModelProvenance& provenance) {
    ordered_json doc;
    doc["format_version"] = kModelFormatVersion;
    doc["kind"] = "logistic-narx-multinomial";
    doc["mode"] = clf.mode == FitMode::Pooled ? "pooled" : "per_class";
    doc["lambda"] = clf.lambda;
    doc["class_labels"] = clf.class_labels;
    doc["channel_names"] = clf.channel_names;

    ordered_json spec;
    spec["nonlinearity_degree"] = clf.term_spec.nonlinearity_degree;
    spec["max_output_lag"] = clf.term_spec.max_output_lag;
    spec["max_input_lag"] = clf.term_spec.max_input_lag;
    spec["input_channels"] = clf.term_spec.input_channels;
    spec["allow_lag_zero_inputs"] = clf.term_spec.allow_lag_zero_inputs;
    doc["term_spec"] = spec;

    ordered_json standardizer;
    standardizer["means"] = vector_to_json(clf.standardizer.means);
    standardizer["stds"] = vector_to_json(clf.standardizer.stds);
    doc["standardizer"] = standardizer;

    ordered_json classes = ordered_json::array();
    for (int v = 0; v < clf.class_count(); ++v) {
        const SelectionTrace& trace = clf.per_class[static_cast<std::size_t>(v)];
        ordered_json entry;
        entry["label"] = clf.class_labels[static_cast<std::size_t>(v)];
        ordered_json terms = ordered_json::array();
        ordered_json scores = ordered_json::array();
        ordered_json indices = ordered_json::array();
        for (const SelectedTerm& sel : trace.selected) {
            terms.push_back(sel.term.render());
            scores.push_back(sel.score);
            indices.push_back(sel.term_index);
        }
        entry["terms"] = terms;
        entry["selection_scores"] = scores;
        entry["library_indices"] = indices;
        entry["model_size"] = clf.model_sizes[static_cast<std::size_t>(v)];
        const LogisticModel& model = clf.models[static_cast<std::size_t>(v)];
        entry["coefficients"] = vector_to_json(model.weights);
        entry["bias"] = model.bias;
        entry["converged"] = model.converged;
        entry["iterations"] = model.iterations;
        entry["ridge_fallback"] = model.ridge_fallback;
        classes.push_back(std::move(entry));
    }
    doc["classes"] = classes;

    ordered_json prov;
    prov["config_hash"] = provenance.config_hash;
    prov["seed"] = provenance.seed;
    doc["provenance"] = prov;

    return doc.dump(2) + "\n";
}

MultinomialNarxClassifier model_from_json(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        throw DataError(std::string("model file: invalid JSON: ") + e.what());
    }
    const int version = require(doc, "format_version").get<int>();
    if (version != kModelFormatVersion)
        throw DataError("model file: unsupported format_version " +
                        std::to_string(version) + ", expected " +
                        std::to_string(kModelFormatVersion));
    if (require(doc, "kind").get<std::string>() != "logistic-narx-multinomial")
        throw DataError("model file: unrecognized kind");

    MultinomialNarxClassifier clf;
    const std::string mode = require(doc, "mode").get<std::string>();
    if (mode == "pooled") clf.mode = FitMode::Pooled;
    else if (mode == "per_class") clf.mode = FitMode::PerClass;
    else throw DataError("model file: unknown mode '" + mode + "'");
    clf.lambda = require(doc, "lambda").get<double>();
    clf.class_labels =
        require(doc, "class_labels").get<std::vector<std::string>>();
    clf.channel_names =
        require(doc, "channel_names").get<std::vector<std::string>>();
    if (clf.class_labels.empty())
        throw DataError("model file: empty class label list");

    const ordered_json& spec = require(doc, "term_spec");
    clf.term_spec.nonlinearity_degree =
        require(spec, "nonlinearity_degree").get<int>();
    clf.term_spec.max_output_lag = require(spec, "max_output_lag").get<int>();
    clf.term_spec.max_input_lag = require(spec, "max_input_lag").get<int>();
    clf.term_spec.input_channels = require(spec, "input_channels").get<int>();
    clf.term_spec.allow_lag_zero_inputs =
        require(spec, "allow_lag_zero_inputs").get<bool>();
    clf.term_spec.validate();
    if (static_cast<int>(clf.channel_names.size()) !=
        clf.term_spec.input_channels)
        throw DataError("model file: channel_names length does not match "
                        "term_spec.input_channels");

    const ordered_json& standardizer = require(doc, "standardizer");
    clf.standardizer.means =
        vector_from_json(require(standardizer, "means"), "standardizer.means");
    clf.standardizer.stds =
        vector_from_json(require(standardizer, "stds"), "standardizer.stds");
    if (clf.standardizer.means.size() != clf.standardizer.stds.size() ||
        clf.standardizer.means.size() !=
            static_cast<Eigen::Index>(clf.channel_names.size()))
        throw DataError("model file: standardizer length mismatch");

    const ordered_json& classes = require(doc, "classes");
    if (!classes.is_array() || classes.size() != clf.class_labels.size())
        throw DataError("model file: classes array must have one entry per "
                        "class label");
    int v = 0;
    for (const auto& entry : classes) {
        if (require(entry, "label").get<std::string>() !=
            clf.class_labels[static_cast<std::size_t>(v)])
            throw DataError("model file: class entry order does not match "
                            "class_labels");
        SelectionTrace trace;
        const auto term_strings =
            require(entry, "terms").get<std::vector<std::string>>();
        const auto scores =
            require(entry, "selection_scores").get<std::vector<double>>();
        const auto indices =
            require(entry, "library_indices").get<std::vector<int>>();
        if (scores.size() != term_strings.size() ||
            indices.size() != term_strings.size())
            throw DataError("model file: per-class term metadata lengths "
                            "disagree");
        for (std::size_t i = 0; i < term_strings.size(); ++i) {
            SelectedTerm sel;
            sel.term = parse_term(term_strings[i]);
            sel.score = scores[i];
            sel.term_index = indices[i];
            trace.selected.push_back(std::move(sel));
        }
        const int size = require(entry, "model_size").get<int>();
        if (size < 0 || size > static_cast<int>(term_strings.size()))
            throw DataError("model file: model_size outside the term list");
        LogisticModel model;
        model.weights =
            vector_from_json(require(entry, "coefficients"), "coefficients");
        if (model.weights.size() != size)
            throw DataError("model file: coefficient count does not match "
                            "model_size");
        model.bias = require(entry, "bias").get<double>();
        model.lambda = clf.lambda;
        model.converged = require(entry, "converged").get<bool>();
        model.iterations = require(entry, "iterations").get<int>();
        model.ridge_fallback = require(entry, "ridge_fallback").get<bool>();
        trace.final_model = model;
        clf.per_class.push_back(std::move(trace));
        clf.model_sizes.push_back(size);
        clf.models.push_back(std::move(model));
        ++v;
    }
    return clf;
}

void save_model(const MultinomialNarxClassifier& clf, const std::string& path,
                const ModelProvenance& provenance) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open model file for writing: " + path);
    out << model_to_json(clf, provenance);
    if (!out) throw DataError("failed writing model file: " + path);
}

MultinomialNarxClassifier load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return model_from_json(buffer.str());
}

ModelProvenance read_provenance(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    ordered_json doc;
    try {
        doc = ordered_json::parse(buffer.str());
    } catch (const ordered_json::parse_error& e) {
        throw DataError(std::string("model file: invalid JSON: ") + e.what());
    }
    ModelProvenance prov;
    const ordered_json& p = require(doc, "provenance");
    prov.config_hash = require(p, "config_hash").get<std::string>();
    prov.seed = require(p, "seed").get<std::uint64_t>();
    return prov;
}

} // namespace narx
