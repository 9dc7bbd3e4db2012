#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "qrcpipe/csv.hpp"
#include "qrcpipe/dataset_gen.hpp"
#include "qrcpipe/errors.hpp"
#include "qrcpipe/harness.hpp"
#include "qrcpipe/preprocess.hpp"
#include "qrcpipe/rng.hpp"

using namespace qrcpipe;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::string out_dir;
};

ExperimentConfig load_experiment(const GlobalOpts& g) {
    Config cfg = g.config_path.empty() ? Config::parse_string("")
                                       : Config::parse_file(g.config_path);
    auto e = ExperimentConfig::from_config(cfg);
    if (g.seed_set) e.seed = g.seed;
    if (!g.out_dir.empty()) e.out_dir = g.out_dir;
    std::filesystem::create_directories(e.out_dir);
    return e;
}

// Reconstructs per-timestep blocks from t<k>_ column prefixes.
std::vector<ReservoirFeatures> features_from_table(const Table& t) {
    std::map<int, std::vector<std::size_t>> blocks;
    for (std::size_t c = 0; c < t.columns.size(); ++c) {
        const auto& name = t.columns[c];
        if (name.size() < 3 || name[0] != 't') {
            throw DataError("column '" + name + "' is not a reservoir feature column");
        }
        const auto us = name.find('_');
        blocks[std::stoi(name.substr(1, us - 1))].push_back(c);
    }
    std::vector<ReservoirFeatures> out(t.n_rows());
    for (std::size_t r = 0; r < t.n_rows(); ++r) {
        for (const auto& [k, cols] : blocks) {
            std::vector<double> row;
            for (auto c : cols) row.push_back(t.rows[r][c]);
            out[r].values.push_back(std::move(row));
        }
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid quantum-classical credit-default classification pipeline"};
    app.require_subcommand(1);

    GlobalOpts g;
    app.add_option("--config", g.config_path, "Configuration file");
    app.add_option("--seed", g.seed, "Master seed override")
        ->each([&g](const std::string&) { g.seed_set = true; });
    app.add_option("--out", g.out_dir, "Output directory");

    std::string output = "";
    std::string mode_flag, encoding_flag, resampler_flag;
    std::string input_a, input_b;
    std::vector<int> shot_grid;
    int replicas = 6;
    std::size_t gen_rows = 30000;

    auto* gen = app.add_subcommand("gen-dataset", "Write the deterministic synthetic dataset");
    gen->add_option("--rows", gen_rows, "Row count");
    gen->add_option("--output", output, "Destination CSV")->required();

    auto* ingest = app.add_subcommand("ingest", "Load, clean, and subset the raw dataset");
    ingest->add_option("--output", output, "Cleaned CSV destination")->required();

    auto* prep = app.add_subcommand("preprocess", "Fit scaler, PCA, and feature clusters");

    auto* res = app.add_subcommand("reservoir", "Compute reservoir features");
    res->add_option("--encoding", encoding_flag, "position or detuning");
    res->add_option("--mode", mode_flag, "sv, shots:N, or crc");

    auto* exq = app.add_subcommand("export-qpu", "Write per-timestep hardware programs");
    exq->add_option("--replicas", replicas, "Replica count");

    auto* ims = app.add_subcommand("import-shots", "Classify from a hardware shot-record file");
    ims->add_option("--records", input_a, "Shot-record file")->required();

    auto* rsm = app.add_subcommand("resample", "Resample the training partition");
    rsm->add_option("--method", resampler_flag, "none, smote, ksmote, or cc")->required();
    rsm->add_option("--features", input_a, "Labeled feature CSV (train partition)")->required();
    rsm->add_option("--output", output, "Destination CSV")->required();

    auto* trn = app.add_subcommand("train", "Run the resampler x classifier benchmark matrix");
    auto* evl = app.add_subcommand("evaluate", "Run the benchmark matrix and print a summary");

    auto* sst = app.add_subcommand("shot-study", "F1 as a function of shot count");
    sst->add_option("--shots", shot_grid, "Shot counts")->required();

    auto* cor = app.add_subcommand("correlate", "Pearson correlation of two feature sets");
    cor->add_option("--a", input_a, "First feature CSV")->required();
    cor->add_option("--b", input_b, "Second feature CSV")->required();

    auto* rep = app.add_subcommand("report", "Summarize a results CSV");
    rep->add_option("--results", input_a, "Results CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            save_raw(output, generate_synthetic_dataset(20240901ULL, gen_rows));
            std::cout << "wrote " << gen_rows << " rows to " << output << "\n";
            return 0;
        }
        auto e = load_experiment(g);
        if (ingest->parsed()) {
            auto records = e.data_csv.empty() ? generate_synthetic_dataset()
                                              : load_raw(e.data_csv);
            auto cleaned = clean(records);
            if (e.dataset_size < cleaned.size()) {
                cleaned = stratified_subset(cleaned, e.dataset_size,
                                            derive_seed(e.seed, "subset"));
            }
            save_raw(output, cleaned);
            std::cout << "wrote " << cleaned.size() << " cleaned rows ("
                      << labels_of(cleaned).size() << " labels) to " << output << "\n";
        } else if (prep->parsed()) {
            const auto data = prepare_data(e);
            Table t = data.preprocessed;
            write_csv(e.out_dir + "/preprocessed.csv", t, "label");
            std::cout << "wrote " << t.n_rows() << " x " << t.n_cols()
                      << " preprocessed features to " << e.out_dir << "/preprocessed.csv\n";
        } else if (res->parsed()) {
            if (!encoding_flag.empty())
                e.reservoir.encoding = encoding_from_string(encoding_flag);
            if (!mode_flag.empty()) {
                if (mode_flag == "crc") e.feature_source = "crc";
                else if (mode_flag == "sv") e.feature_source = "qrc-sv";
                else if (mode_flag.rfind("shots:", 0) == 0) {
                    e.feature_source = "qrc-shots";
                    e.shots = std::stoi(mode_flag.substr(6));
                } else throw ConfigError("unknown mode '" + mode_flag + "'");
            } else if (e.feature_source == "preprocessed") {
                e.feature_source = "qrc-sv";
            }
            const auto data = prepare_data(e);
            auto features = feature_table(data.preprocessed, e);
            write_csv(e.out_dir + "/reservoir_features.csv", features, "label");
            std::cout << "wrote " << features.n_rows() << " x " << features.n_cols()
                      << " reservoir features to " << e.out_dir << "/reservoir_features.csv\n";
        } else if (exq->parsed()) {
            const int files = export_for_hardware(e, replicas);
            std::cout << "wrote " << files << " program-spec files ("
                      << files * e.reservoir.n_timesteps << " programs) to " << e.out_dir
                      << "\n";
        } else if (ims->parsed()) {
            const auto rows = import_and_classify(input_a, e);
            write_results(e.out_dir + "/results.csv", rows);
            std::cout << "wrote " << rows.size() << " result rows to " << e.out_dir
                      << "/results.csv\n";
        } else if (rsm->parsed()) {
            auto train = read_csv(input_a, "label");
            ResamplePlan plan;
            plan.method = resample_method_from_string(resampler_flag);
            plan.seed = derive_seed(e.seed, "resample-cli");
            auto out = resample(train, plan);
            write_csv(output, out, "label");
            std::cout << "wrote " << out.n_rows() << " rows (" << out.count_label(1) << "/"
                      << out.count_label(0) << " class 1/0) to " << output << "\n";
        } else if (trn->parsed() || evl->parsed()) {
            const auto rows = run_experiment(e);
            write_results(e.out_dir + "/results.csv", rows);
            std::cout << "wrote " << rows.size() << " result rows to " << e.out_dir
                      << "/results.csv\n";
            if (evl->parsed()) {
                for (const auto& r : rows) {
                    if (!r.error.empty()) {
                        std::cout << r.resampler << " " << r.classifier << "  ERROR "
                                  << r.error << "\n";
                    } else {
                        std::cout << r.resampler << " " << r.classifier << "  f1=" << r.f1
                                  << " (" << r.hyperparameters << ")\n";
                    }
                }
            }
        } else if (sst->parsed()) {
            if (e.feature_source == "preprocessed") e.feature_source = "qrc-sv";
            const auto rows = shot_study(e, shot_grid);
            std::ofstream out(e.out_dir + "/shot_study.csv");
            out << "shots,classifier,f1\n";
            for (const auto& r : rows)
                out << r.shots << ',' << r.classifier << ',' << r.f1 << '\n';
            std::cout << "wrote " << rows.size() << " rows to " << e.out_dir
                      << "/shot_study.csv\n";
        } else if (cor->parsed()) {
            const auto a = features_from_table(read_csv(input_a, "label"));
            const auto b = features_from_table(read_csv(input_b, "label"));
            const auto repc = correlate_features(a, b);
            for (std::size_t k = 0; k < repc.per_timestep.size(); ++k) {
                std::cout << "timestep " << (k + 1) << ": ";
                if (repc.defined[k]) std::cout << repc.per_timestep[k] << "\n";
                else std::cout << "undefined (zero variance)\n";
            }
            std::cout << "mean: " << repc.mean << "\n";
        } else if (rep->parsed()) {
            std::ifstream in(input_a);
            if (!in) throw DataError("cannot open results file: " + input_a);
            std::string line;
            while (std::getline(in, line)) std::cout << line << "\n";
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
