// hac: train, encode, decode, evaluate and plot for the hierarchical codec.
// Exit codes: 0 success, 1 runtime failure, 2 configuration error.

#include <CLI11.hpp>

#include "hac/hac.hpp"

namespace fs = std::filesystem;

namespace {

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& resume_path) {
    hac::RunConfig rc = hac::parse_run_config(config_path, overrides);
    rc.resume_from = resume_path;
    rc.validate_for_training();
    hac::Dataset ds = hac::Dataset::load(rc.data_root, rc.model, rc.dataset_options());
    hac::Trainer trainer(rc.model, rc.train, rc.seed);
    if (!rc.resume_from.empty()) trainer.resume(rc.resume_from);
    std::cout << "training " << rc.model.name << " on " << ds.size() << " utterances, "
              << rc.steps << " steps -> " << rc.out_dir << "\n";
    hac::StepLog last = trainer.train_loop(ds, rc.steps, rc.checkpoint_every, rc.out_dir);
    if (rc.steps > 0) {
        std::cout << "final step " << last.step << ":";
        for (const auto& [name, v] : last.losses) std::cout << " " << name << "=" << v;
        std::cout << "\n";
    }
    std::cout << "checkpoint: " << rc.out_dir << "/final.hack\n";
    return 0;
}

int cmd_encode(const std::string& checkpoint, const std::vector<std::string>& wavs,
               const std::string& out_dir) {
    hac::CodecModel model = hac::load_model(checkpoint);
    fs::create_directories(out_dir);
    for (const auto& path : wavs) {
        hac::Waveform x = hac::load_waveform(path, model.config().sample_rate);
        hac::TokenMatrix tokens = model.encode_tokens(x);
        const std::string out =
            (fs::path(out_dir) / (fs::path(path).stem().string() + ".hact")).string();
        hac::write_tokens(tokens, out);
        std::cout << out << ": " << tokens.num_frames() << " frames x "
                  << tokens.num_layers() << " layers, " << tokens.bits_per_frame()
                  << " bits/frame\n";
    }
    return 0;
}

int cmd_decode(const std::string& checkpoint, const std::string& token_path,
               const std::string& out_path) {
    hac::CodecModel model = hac::load_model(checkpoint);
    hac::TokenMatrix tokens = hac::read_tokens(token_path);
    hac::Waveform wave = model.decode_tokens(tokens);
    hac::write_wav(out_path, wave);
    std::cout << out_path << ": " << wave.size() << " samples @ " << wave.sample_rate
              << " Hz\n";
    return 0;
}

int cmd_eval(const std::string& checkpoint, const std::string& tokens_dir,
             const std::string& corpus, const std::string& metrics_arg,
             const std::vector<std::string>& layers, const std::string& abx_manifest,
             const std::string& abx_features, const std::string& abx_pairing,
             const std::string& label, const std::string& out_dir) {
    std::unique_ptr<hac::CodecModel> model;
    if (!checkpoint.empty())
        model = std::make_unique<hac::CodecModel>(hac::load_model(checkpoint));

    hac::EvalRequest req;
    std::istringstream ms(metrics_arg);
    std::string m;
    while (std::getline(ms, m, ',')) req.metrics.insert(m);
    hac::check(!req.metrics.empty(), "no metrics selected");
    req.layers = layers;
    req.abx_manifest = abx_manifest;
    req.abx_features = abx_features;
    if (abx_pairing == "within_speaker" || abx_pairing == "across_speaker")
        req.abx_pairings = {hac::abx_pairing_from(abx_pairing)};
    else
        hac::check(abx_pairing == "both", "abx pairing must be within_speaker, across_speaker or both");
    req.model_label = label.empty() ? (model ? model->config().name : "tokens") : label;

    if ((req.metrics.count("pnmi") || req.metrics.count("wordf1")) &&
        !fs::is_directory(fs::path(corpus) / "ali"))
        throw hac::Error("pnmi/wordf1 need alignments under " + corpus + "/ali");

    std::vector<hac::EvalUtterance> utts = hac::load_eval_corpus(corpus, model.get(), tokens_dir);
    hac::EvalResult result = hac::run_eval(utts, model.get(), req, out_dir);
    for (const auto& v : result.summary)
        std::cout << v.metric << (v.layer.empty() ? "" : " [" + v.layer + "]") << " = "
                  << v.value << "\n";
    std::cout << "wrote " << out_dir << "/summary.json\n";
    return 0;
}

int cmd_plot(const std::string& in_dir, const std::string& out_dir) {
    fs::create_directories(out_dir);
    long made = 0;
    if (fs::exists(fs::path(in_dir) / "abx.csv")) {
        hac::CsvTable t = hac::read_csv((fs::path(in_dir) / "abx.csv").string());
        hac::plot_grouped_bars(t, "model", "pairing", "error", "ABX error rate",
                               (fs::path(out_dir) / "abx.svg").string());
        ++made;
    }
    if (fs::exists(fs::path(in_dir) / "pnmi.csv")) {
        hac::CsvTable t = hac::read_csv((fs::path(in_dir) / "pnmi.csv").string());
        hac::plot_grouped_bars(t, "model", "layer", "pnmi",
                               "Phoneme-normalized mutual information",
                               (fs::path(out_dir) / "pnmi.svg").string());
        ++made;
    }
    if (fs::exists(fs::path(in_dir) / "wordf1_curve.csv")) {
        hac::CsvTable t = hac::read_csv((fs::path(in_dir) / "wordf1_curve.csv").string());
        hac::plot_threshold_curves(t, "Word detectors above F1 threshold",
                                   (fs::path(out_dir) / "word_detectors.svg").string());
        ++made;
    }
    if (fs::exists(fs::path(in_dir) / "recon.csv")) {
        hac::CsvTable t = hac::read_csv((fs::path(in_dir) / "recon.csv").string());
        hac::plot_table(t, "Reconstruction metrics",
                        (fs::path(out_dir) / "recon_table.svg").string());
        ++made;
    }
    hac::check(made > 0, "no metric csv files found under " + in_dir);
    std::cout << "wrote " << made << " figure(s) to " << out_dir << "\n";
    return 0;
}

int cmd_corpus(const std::string& out, long utterances, std::uint64_t seed, long sample_rate,
               long hop, bool lexical_files) {
    hac::SynthCorpusSpec spec;
    spec.utterances = utterances;
    spec.seed = seed;
    spec.sample_rate = sample_rate;
    spec.hop = hop;
    spec.write_lexical_files = lexical_files;
    hac::generate_synth_corpus(out, spec);
    std::cout << "wrote " << utterances << " utterances to " << out << "\n";
    return 0;
}

int cmd_export(const std::string& checkpoint, const std::string& out,
               const std::string& codebooks) {
    hac::CheckpointMeta meta;
    hac::CodecModel model = hac::load_model(checkpoint, &meta);
    if (!out.empty()) {
        hac::save_checkpoint(out, model, meta.step);  // inference-only: no training section
        std::cout << "wrote inference checkpoint " << out << "\n";
    }
    if (!codebooks.empty()) {
        hac::export_codebooks(codebooks, model);
        std::cout << "wrote codebook export " << codebooks << "\n";
    }
    hac::check(!out.empty() || !codebooks.empty(), "nothing to export (pass --out or --codebooks)");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical audio codec toolkit"};
    app.require_subcommand(1);

    // train
    std::string train_config;
    std::vector<std::string> overrides;
    std::string seed_ov, steps_ov, out_ov, resume;
    auto* train = app.add_subcommand("train", "train a codec from a config file");
    train->add_option("--config", train_config, "key = value config file")->required();
    train->add_option("--set", overrides, "override a config key (key=value, repeatable)");
    train->add_option("--seed", seed_ov, "override the run seed");
    train->add_option("--steps", steps_ov, "override the step count");
    train->add_option("--out", out_ov, "override the output directory");
    train->add_option("--resume", resume, "resume from a training checkpoint");

    // encode
    std::string ck, enc_out = "tokens";
    std::vector<std::string> wavs;
    auto* encode = app.add_subcommand("encode", "audio files to token files");
    encode->add_option("--checkpoint", ck, "model checkpoint")->required();
    encode->add_option("--out-dir", enc_out, "where .hact files go");
    encode->add_option("wavs", wavs, "input wav files")->required();

    // decode
    std::string dck, dtok, dout = "decoded.wav";
    auto* decode = app.add_subcommand("decode", "token file to audio");
    decode->add_option("--checkpoint", dck, "model checkpoint")->required();
    decode->add_option("--tokens", dtok, "token file")->required();
    decode->add_option("--out", dout, "output wav path");

    // eval
    std::string eck, etok, ecorpus, emetrics = "pnmi,wordf1,recon", emanifest;
    std::string efeatures = "codebook", epairing = "both", elabel, eout = "eval";
    std::vector<std::string> elayers;
    auto* evalc = app.add_subcommand("eval", "run metrics over a corpus");
    evalc->add_option("--checkpoint", eck, "model checkpoint (encodes wavs)");
    evalc->add_option("--tokens-dir", etok, "pre-encoded token files (no checkpoint needed)");
    evalc->add_option("--data", ecorpus, "corpus root with wav/ and ali/")->required();
    evalc->add_option("--metrics", emetrics, "comma list: pnmi,wordf1,abx,recon");
    evalc->add_option("--layer", elayers, "token layer(s) to evaluate (default: all)");
    evalc->add_option("--abx-manifest", emanifest, "abx item manifest");
    evalc->add_option("--abx-features", efeatures, "codebook or onehot");
    evalc->add_option("--abx-pairing", epairing, "within_speaker, across_speaker or both");
    evalc->add_option("--label", elabel, "model label in csv output");
    evalc->add_option("--out", eout, "output directory");

    // plot
    std::string pin, pout = "figures";
    auto* plot = app.add_subcommand("plot", "render metric csv files as svg figures");
    plot->add_option("--in", pin, "directory with metric csv files")->required();
    plot->add_option("--out", pout, "output directory");

    // corpus
    std::string cout_dir;
    long cutts = 48, csr = 8000, chop = 160;
    std::uint64_t cseed = 1234;
    bool clex = false;
    auto* corpus = app.add_subcommand("corpus", "generate the synthetic diagnostic corpus");
    corpus->add_option("--out", cout_dir, "corpus root to create")->required();
    corpus->add_option("--utterances", cutts, "number of utterances");
    corpus->add_option("--seed", cseed, "corpus seed");
    corpus->add_option("--sample-rate", csr, "sample rate");
    corpus->add_option("--hop", chop, "teacher frame hop in samples");
    corpus->add_flag("--lexical-files", clex, "also write lexical teacher files");

    // export
    std::string xck, xout, xcb;
    auto* exportc = app.add_subcommand("export", "strip training state from a checkpoint");
    exportc->add_option("--checkpoint", xck, "training checkpoint")->required();
    exportc->add_option("--out", xout, "inference checkpoint path");
    exportc->add_option("--codebooks", xcb, "standalone codebook export path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            if (!seed_ov.empty()) overrides.push_back("seed=" + seed_ov);
            if (!steps_ov.empty()) overrides.push_back("steps=" + steps_ov);
            if (!out_ov.empty()) overrides.push_back("out_dir=" + out_ov);
            return cmd_train(train_config, overrides, resume);
        }
        if (*encode) return cmd_encode(ck, wavs, enc_out);
        if (*decode) return cmd_decode(dck, dtok, dout);
        if (*evalc)
            return cmd_eval(eck, etok, ecorpus, emetrics, elayers, emanifest, efeatures,
                            epairing, elabel, eout);
        if (*plot) return cmd_plot(pin, pout);
        if (*corpus) return cmd_corpus(cout_dir, cutts, cseed, csr, chop, clex);
        if (*exportc) return cmd_export(xck, xout, xcb);
    } catch (const hac::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const hac::TrainAbort& e) {
        std::cerr << "training aborted: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
