#include "qrcpipe/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qrcpipe/crc.hpp"
#include "qrcpipe/dataset_gen.hpp"
#include "qrcpipe/dnn.hpp"
#include "qrcpipe/errors.hpp"
#include "qrcpipe/preprocess.hpp"
#include "qrcpipe/rng.hpp"

namespace qrcpipe {

namespace {

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r");
    auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

}  // namespace

Config Config::parse_string(const std::string& text) {
    Config cfg;
    std::istringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) +
                              ": expected 'key = value'");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        }
        cfg.entries_[section.empty() ? key : section + "." + key] = value;
    }
    return cfg;
}

Config Config::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
}

bool Config::has(const std::string& key) const { return entries_.count(key) > 0; }

std::string Config::get(const std::string& key, const std::string& fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second;
}

std::string Config::require(const std::string& key) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError("missing config key: " + key);
    return it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
    const auto it = entries_.find(key);
    if (it == entries_.end()) return fallback;
    try {
        std::size_t pos = 0;
        const double v = std::stod(it->second, &pos);
        if (pos != it->second.size()) throw std::invalid_argument(key);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": '" + it->second + "' is not a number");
    }
}

int Config::get_int(const std::string& key, int fallback) const {
    const double v = get_double(key, double(fallback));
    const int i = int(std::llround(v));
    if (double(i) != v) throw ConfigError("config key " + key + ": expected an integer");
    return i;
}

std::vector<std::string> Config::get_list(const std::string& key,
                                          const std::string& fallback) const {
    const auto raw = get(key, fallback);
    std::vector<std::string> out;
    std::string item;
    std::istringstream ss(raw);
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

ExperimentConfig ExperimentConfig::from_config(const Config& cfg) {
    ExperimentConfig e;
    const int ds = cfg.get_int("dataset", 30000);
    switch (ds) {
        case 30000: e.dataset_size = 30000; break;
        case 2500: e.dataset_size = 2571; break;
        case 1000: e.dataset_size = 1000; break;
        default:
            e.dataset_size = std::size_t(ds);
            if (ds < 10) throw ConfigError("dataset must name a subset size");
    }
    e.feature_source = cfg.get("feature_source", "preprocessed");
    if (e.feature_source.rfind("qrc-shots", 0) == 0) {
        const auto colon = e.feature_source.find(':');
        e.shots = colon == std::string::npos ? 240 : std::stoi(e.feature_source.substr(colon + 1));
        e.feature_source = "qrc-shots";
    }
    e.reservoir.r0 = cfg.get_double("reservoir.r0_um", e.reservoir.r0);
    e.reservoir.lambda = cfg.get_double("reservoir.lambda", e.reservoir.lambda);
    e.reservoir.delta_local =
        cfg.get_double("reservoir.delta_local_rad_per_us", e.reservoir.delta_local);
    e.reservoir.omega_max =
        cfg.get_double("reservoir.omega_max_rad_per_us", e.reservoir.omega_max);
    e.reservoir.delta_global =
        cfg.get_double("reservoir.delta_global_rad_per_us", e.reservoir.delta_global);
    e.reservoir.ramp = cfg.get_double("reservoir.ramp_us", e.reservoir.ramp);
    e.reservoir.timestep = cfg.get_double("reservoir.timestep_us", e.reservoir.timestep);
    e.reservoir.n_timesteps = cfg.get_int("reservoir.n_timesteps", e.reservoir.n_timesteps);
    e.reservoir.c6 = cfg.get_double("reservoir.c6_rad_um6_per_us", e.reservoir.c6);
    e.reservoir.dt = cfg.get_double("reservoir.dt_us", e.reservoir.dt);
    e.reservoir.encoding = encoding_from_string(cfg.get("encoding", "detuning"));
    if (e.reservoir.r0 <= 0 || e.reservoir.ramp <= 0 || e.reservoir.n_timesteps < 1 ||
        e.reservoir.c6 <= 0) {
        throw ConfigError("reservoir config out of range (r0, ramp, n_timesteps, c6)");
    }
    e.resamplers.clear();
    for (const auto& m : cfg.get_list("resamplers", "none,smote,ksmote,cc")) {
        e.resamplers.push_back(resample_method_from_string(m));
    }
    e.classifiers = cfg.get_list("classifiers",
                                 "knn,gnb,logistic,perceptron,sgd-hinge,svm-linear");
    e.fractions.train = cfg.get_double("split.train", 0.70);
    e.fractions.validation = cfg.get_double("split.validation", 0.15);
    e.fractions.test = cfg.get_double("split.test", 0.15);
    e.seed = std::uint64_t(cfg.get_double("seed", 11));
    e.repeats = cfg.get_int("repeats", 5);
    e.data_csv = cfg.get("data_csv", "");
    e.out_dir = cfg.get("out", ".");
    e.threads = cfg.get_int("threads", 0);
    if (e.shots < 0 || (e.feature_source == "qrc-shots" && e.shots < 1)) {
        throw ConfigError("qrc-shots requires a positive shot count");
    }
    return e;
}

std::uint64_t ExperimentConfig::hash() const {
    std::uint64_t h = fnv1a("experiment-config");
    h = fnv1a(feature_source, h);
    auto mix = [&h](std::uint64_t v) { h = fnv1a(&v, sizeof v, h); };
    mix(dataset_size);
    mix(std::uint64_t(shots));
    mix(reservoir.hash());
    for (auto m : resamplers) h = fnv1a(to_string(m), h);
    for (const auto& c : classifiers) h = fnv1a(c, h);
    mix(seed);
    return splitmix64(h);
}

void write_results(const std::string& path, const std::vector<ResultRow>& rows) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write results file: " + path);
    out << "dataset,feature_source,encoding,resampler,classifier,"
           "selected_hyperparameters,f1,precision,recall,accuracy,train_time_s,seed,"
           "config_hash,error\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.6f,%.6f,%.6f,%.6f,%.3f", r.f1, r.precision,
                      r.recall, r.accuracy, r.train_time_s);
        out << r.dataset << ',' << r.feature_source << ',' << r.encoding << ','
            << r.resampler << ',' << r.classifier << ',' << r.hyperparameters << ',' << buf
            << ',' << r.seed << ',' << r.config_hash << ',' << r.error << '\n';
    }
}

LabeledSplit partition_table(const Table& features, const SplitIndices& idx) {
    if (!features.labeled()) throw DataError("partition_table requires labels");
    LabeledSplit out;
    auto take = [&features](const std::vector<std::size_t>& which) {
        Table t;
        t.columns = features.columns;
        for (auto i : which) {
            t.rows.push_back(features.rows[i]);
            t.labels.push_back(features.labels[i]);
        }
        return t;
    };
    out.train = take(idx.train);
    out.validation = take(idx.validation);
    out.test = take(idx.test);
    return out;
}

namespace {

std::string dataset_name(std::size_t subset_size, std::size_t cleaned_size) {
    if (subset_size >= cleaned_size) return "CARDS_30000";
    if (subset_size == 2571) return "CARDS_2500";
    if (subset_size == 1000) return "CARDS_1000";
    return "CARDS_" + std::to_string(subset_size);
}

}  // namespace

PreparedData prepare_data(const ExperimentConfig& cfg) {
    auto records = cfg.data_csv.empty() ? generate_synthetic_dataset() : load_raw(cfg.data_csv);
    auto cleaned = clean(records);
    if (cfg.dataset_size < cleaned.size()) {
        cleaned = stratified_subset(cleaned, cfg.dataset_size, derive_seed(cfg.seed, "subset"));
    }
    PreparedData out;
    out.labels = labels_of(cleaned);
    out.idx = split_indices(out.labels, cfg.fractions, derive_seed(cfg.seed, "split"));
    const auto models = fit_preprocess(cleaned);
    out.preprocessed = apply_preprocess(models, cleaned);
    out.preprocessed.labels = out.labels;
    return out;
}

Table feature_table(const Table& preprocessed, const ExperimentConfig& cfg) {
    if (cfg.feature_source == "preprocessed") return preprocessed;
    std::string mode;
    if (cfg.feature_source == "qrc-sv") {
        mode = "sv";
    } else if (cfg.feature_source == "qrc-shots") {
        mode = "shots:" + std::to_string(cfg.shots);
    } else if (cfg.feature_source == "crc") {
        mode = "crc";
    } else {
        throw ConfigError("unknown feature source '" + cfg.feature_source + "'");
    }
    return reservoir_table(preprocessed, cfg.reservoir, mode,
                           derive_seed(cfg.seed, "reservoir"), cfg.threads);
}

namespace {

std::vector<ResultRow> classify_matrix(const Table& features, const SplitIndices& idx,
                                       const ExperimentConfig& cfg,
                                       const std::string& source_tag,
                                       const std::string& ds_name) {
    const auto parts = partition_table(features, idx);
    char hash_buf[24];
    std::snprintf(hash_buf, sizeof hash_buf, "%016llx",
                  static_cast<unsigned long long>(cfg.hash()));
    std::vector<ResultRow> rows;
    for (std::size_t mi = 0; mi < cfg.resamplers.size(); ++mi) {
        const auto method = cfg.resamplers[mi];
        ResultRow proto;
        proto.dataset = ds_name;
        proto.feature_source = source_tag;
        proto.encoding = to_string(cfg.reservoir.encoding);
        proto.resampler = to_string(method);
        proto.seed = cfg.seed;
        proto.config_hash = hash_buf;

        Table train;
        bool train_ok = true;
        std::string train_error;
        try {
            ResamplePlan plan;
            plan.method = method;
            plan.seed = derive_seed(cfg.seed, "resample", mi);
            train = resample(parts.train, plan);
        } catch (const std::exception& e) {
            train_ok = false;
            train_error = e.what();
        }
        for (const auto& name : cfg.classifiers) {
            ResultRow row = proto;
            row.classifier = name;
            if (!train_ok) {
                row.error = train_error;
                rows.push_back(std::move(row));
                continue;
            }
            try {
                if (name == "dnn") {
                    const auto res = dnn_grid_search(train, parts.validation, parts.test,
                                                     derive_seed(cfg.seed, "dnn", mi));
                    row.hyperparameters = res.hyperparameters;
                    row.f1 = res.test.f1;
                    row.precision = res.test.precision;
                    row.recall = res.test.recall;
                    row.accuracy = res.test.accuracy;
                    row.train_time_s = res.train_seconds;
                } else {
                    const auto res =
                        run_classifier(classifier_from_string(name), train, parts.validation,
                                       parts.test, derive_seed(cfg.seed, "clf", mi));
                    row.hyperparameters = res.cells[res.selected].hyperparameters;
                    row.f1 = res.test.f1;
                    row.precision = res.test.precision;
                    row.recall = res.test.recall;
                    row.accuracy = res.test.accuracy;
                    row.train_time_s = res.total_train_seconds;
                }
            } catch (const std::exception& e) {
                row.error = e.what();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
    const auto data = prepare_data(cfg);
    const auto features = feature_table(data.preprocessed, cfg);
    const auto source_tag = cfg.feature_source == "qrc-shots"
                                ? "qrc-shots:" + std::to_string(cfg.shots)
                                : cfg.feature_source;
    return classify_matrix(features, data.idx, cfg, source_tag,
                           dataset_name(cfg.dataset_size, data.labels.size() + 1));
}

std::vector<ShotStudyRow> shot_study(const ExperimentConfig& cfg,
                                     const std::vector<int>& shot_grid) {
    if (cfg.feature_source != "qrc-sv" && cfg.feature_source != "qrc-shots") {
        throw ConfigError("shot study requires a qrc feature source");
    }
    if (shot_grid.empty()) return {};
    const auto data = prepare_data(cfg);
    std::vector<ShotStudyRow> rows;

    auto evaluate = [&](const Table& features, int shots_tag) {
        const auto parts = partition_table(features, data.idx);
        for (const auto& name : cfg.classifiers) {
            ShotStudyRow row;
            row.shots = shots_tag;
            row.classifier = name;
            if (name == "dnn") {
                row.f1 = dnn_grid_search(parts.train, parts.validation, parts.test,
                                         derive_seed(cfg.seed, "dnn-shot", shots_tag))
                             .test.f1;
            } else {
                row.f1 = run_classifier(classifier_from_string(name), parts.train,
                                        parts.validation, parts.test,
                                        derive_seed(cfg.seed, "clf-shot", shots_tag))
                             .test.f1;
            }
            rows.push_back(std::move(row));
        }
    };

    evaluate(reservoir_table(data.preprocessed, cfg.reservoir, "sv",
                             derive_seed(cfg.seed, "reservoir"), cfg.threads),
             0);
    for (int shots : shot_grid) {
        // Independent substream per shot count.
        evaluate(reservoir_table(data.preprocessed, cfg.reservoir,
                                 "shots:" + std::to_string(shots),
                                 derive_seed(cfg.seed, "shot-study", std::uint64_t(shots)),
                                 cfg.threads),
                 shots);
    }
    return rows;
}

CorrelationReport correlate_features(const std::vector<ReservoirFeatures>& a,
                                     const std::vector<ReservoirFeatures>& b) {
    if (a.size() != b.size() || a.empty()) {
        throw DataError("correlate_features: sample sets must match and be non-empty");
    }
    const auto n_steps = a[0].n_timesteps();
    CorrelationReport rep;
    double sum = 0.0;
    int defined = 0;
    for (std::size_t k = 0; k < n_steps; ++k) {
        std::vector<double> va, vb;
        for (std::size_t s = 0; s < a.size(); ++s) {
            if (a[s].n_timesteps() != n_steps || b[s].n_timesteps() != n_steps ||
                a[s].values[k].size() != b[s].values[k].size()) {
                throw DataError("correlate_features: dimensionality mismatch at sample " +
                                std::to_string(s));
            }
            va.insert(va.end(), a[s].values[k].begin(), a[s].values[k].end());
            vb.insert(vb.end(), b[s].values[k].begin(), b[s].values[k].end());
        }
        double ma = 0.0, mb = 0.0;
        for (std::size_t i = 0; i < va.size(); ++i) {
            ma += va[i];
            mb += vb[i];
        }
        ma /= double(va.size());
        mb /= double(vb.size());
        double saa = 0.0, sbb = 0.0, sab = 0.0;
        for (std::size_t i = 0; i < va.size(); ++i) {
            saa += (va[i] - ma) * (va[i] - ma);
            sbb += (vb[i] - mb) * (vb[i] - mb);
            sab += (va[i] - ma) * (vb[i] - mb);
        }
        if (saa <= 0.0 || sbb <= 0.0) {
            rep.per_timestep.push_back(std::nan(""));
            rep.defined.push_back(false);
        } else {
            // Identical (or exactly negated) inputs must score exactly +-1;
            // the quotient below can be off by an ulp.
            const double r = (sab == saa && saa == sbb)    ? 1.0
                             : (sab == -saa && saa == sbb) ? -1.0
                                                           : sab / std::sqrt(saa * sbb);
            rep.per_timestep.push_back(r);
            rep.defined.push_back(true);
            sum += r;
            ++defined;
        }
    }
    rep.mean = defined ? sum / double(defined) : std::nan("");
    return rep;
}

int export_for_hardware(const ExperimentConfig& cfg, int replicas) {
    const auto data = prepare_data(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    int count = 0;
    for (std::size_t r = 0; r < data.preprocessed.n_rows(); ++r) {
        const auto sample = encode(data.preprocessed.rows[r], cfg.reservoir);
        const auto layout = embed_register(sample, replicas, cfg.reservoir);
        const auto programs = export_programs(sample, cfg.reservoir);
        const auto id = "s" + std::to_string(r);
        const auto doc = serialize_programs(id, sample, layout, programs, cfg.reservoir);
        std::ofstream out(cfg.out_dir + "/qpu_" + id + ".prog");
        if (!out) throw DataError("cannot write program spec in " + cfg.out_dir);
        out << doc;
        ++count;
    }
    return count;
}

std::vector<ResultRow> import_and_classify(const std::string& shot_record_path,
                                           const ExperimentConfig& cfg) {
    const auto data = prepare_data(cfg);
    const auto n_atoms = int(cfg.reservoir.encoding == Encoding::position
                                 ? data.preprocessed.n_cols() + 1
                                 : data.preprocessed.n_cols());
    std::vector<std::string> ids;
    for (std::size_t r = 0; r < data.preprocessed.n_rows(); ++r)
        ids.push_back("s" + std::to_string(r));
    const auto records = parse_shot_records(shot_record_path);
    const auto features =
        import_hardware_features(records, ids, n_atoms, cfg.reservoir.n_timesteps);

    Table table;
    const auto block = feature_names(n_atoms);
    for (int k = 1; k <= cfg.reservoir.n_timesteps; ++k)
        for (const auto& nm : block) table.columns.push_back("t" + std::to_string(k) + "_" + nm);
    for (const auto& f : features) table.rows.push_back(f.flat());
    table.labels = data.labels;
    return classify_matrix(table, data.idx, cfg, "hardware",
                           dataset_name(cfg.dataset_size, data.labels.size() + 1));
}

}  // namespace qrcpipe
