#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "hac/train/trainer.hpp"
#include "test_util.hpp"

using namespace hac;
using hac::testing::random_tensor;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("hac_train_" + std::to_string(::getpid()) + "_" +
                std::to_string((std::uintptr_t)this));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str(const std::string& n = "") const { return (path / n).string(); }
};

Waveform tone(long rate, long samples, real freq, std::uint64_t seed = 0) {
    Waveform w;
    w.sample_rate = rate;
    w.samples.resize((size_t)samples);
    Rng rng(seed);
    for (long i = 0; i < samples; ++i)
        w.samples[(size_t)i] =
            0.5 * std::sin(2.0 * 3.14159265358979323846 * freq * (real)i / (real)rate) +
            (seed ? 0.01 * rng.normal() : 0.0);
    return w;
}

// micro preset for fast trainer tests
CodecConfig micro_model() {
    CodecConfig c;
    c.name = "micro";
    c.sample_rate = 8000;
    c.encoder_strides = {2, 2};
    c.embed_dim = 8;
    c.acoustic_layers = 2;
    c.acoustic_codebook = 8;
    c.code_dim_acoustic = 4;
    c.phonetic_codebook = 8;
    c.lexical_codebook = 8;
    c.code_dim_phonetic = 4;
    c.code_dim_lexical = 4;
    c.branches = Branches::phonetic_lexical;
    c.encoder_channels = {4, 4, 4};
    c.decoder_channels = {4, 4, 4};
    c.residual_units = 1;
    c.transformer = TransformerConfig{1, 2, 8, 16, 3, 2, true};
    c.kd_phonetic_dim = 4;
    c.kd_lexical_dim = 4;
    return c;
}

TrainConfig micro_train() {
    TrainConfig t;
    t.lr = 1e-3;
    t.lr_gamma = 1.0;
    t.crop_seconds = 0.016;  // 128 samples, 32 frames
    t.batch_seconds = 0.016;
    t.mel.windows = {64, 32};
    t.mel.mels = {8, 5};
    t.disc.periods = {2, 3};
    t.disc.band_ffts = {64};
    t.disc.channels = 4;
    t.disc.layers = 2;
    t.ema_reinit_interval = 50;
    return t;
}

void write_micro_corpus(const std::string& root, long utts = 2) {
    fs::create_directories(fs::path(root) / "wav");
    fs::create_directories(fs::path(root) / "ali");
    for (long i = 0; i < utts; ++i) {
        const std::string id = "utt" + std::to_string(i);
        write_wav((fs::path(root) / "wav" / (id + ".wav")).string(),
                  tone(8000, 512, 300.0 + 100.0 * (real)i, 7 + (std::uint64_t)i));
        std::ofstream ali((fs::path(root) / "ali" / (id + ".ali")).string());
        ali << "tier word\n0.000 0.030 alpha\n0.034 0.064 beta\n";
        ali << "tier phone\n0.000 0.015 aa\n0.015 0.030 l\n0.034 0.050 b\n0.050 0.064 t\n";
    }
}

}  // namespace

TEST_CASE("mel loss is zero on identical inputs and sign-invariant") {
    Rng rng(91);
    MelLossConfig cfg;
    cfg.windows = {128, 64};
    cfg.mels = {10, 6};
    Tensor x = random_tensor({400}, rng, 0.3, false);
    REQUIRE(mel_reconstruction_loss(x, x, cfg, 8000).item() == 0.0);

    std::vector<real> neg(x.values());
    for (auto& v : neg) v = -v;
    Tensor xn = Tensor::from_data({400}, neg, false);
    REQUIRE(mel_reconstruction_loss(xn, x, cfg, 8000).item() ==
            Catch::Approx(0.0).margin(1e-12));

    Tensor y = random_tensor({401}, rng, 0.3, false);
    REQUIRE_THROWS_WITH(mel_reconstruction_loss(y, x, cfg, 8000),
                        Catch::Matchers::ContainsSubstring("length mismatch"));
}

TEST_CASE("mel loss matches a naive spectral oracle on a sine pair") {
    MelLossConfig cfg;
    cfg.windows = {256};
    cfg.mels = {20};
    const long n = 2048, sr = 16000;
    Waveform a = tone(sr, n, 440.0), b = tone(sr, n, 880.0);
    Tensor ta = Tensor::from_data({n}, a.samples, false);
    Tensor tb = Tensor::from_data({n}, b.samples, false);
    const real got = mel_reconstruction_loss(ta, tb, cfg, sr).item();

    // naive: direct DFT per frame, triangular filterbank, log10 with floor, L1
    const long win = 256, hop = 64, bins = 129, frames = 1 + (n - win) / hop;
    Mat fb = mel_filterbank(20, win, sr);
    auto logmel = [&](const std::vector<real>& x) {
        Mat out(frames, 20);
        for (long f = 0; f < frames; ++f) {
            std::vector<real> mag((size_t)bins);
            for (long k = 0; k < bins; ++k) {
                real re = 0, im = 0;
                for (long t = 0; t < win; ++t) {
                    const real w = 0.5 - 0.5 * std::cos(2.0 * 3.14159265358979323846 * t / 256.0);
                    const real ang = -2.0 * 3.14159265358979323846 * k * t / 256.0;
                    re += x[(size_t)(f * hop + t)] * w * std::cos(ang);
                    im += x[(size_t)(f * hop + t)] * w * std::sin(ang);
                }
                mag[(size_t)k] = std::sqrt(re * re + im * im);
            }
            for (long m = 0; m < 20; ++m) {
                real acc = 0;
                for (long k = 0; k < bins; ++k) acc += fb.at(m, k) * mag[(size_t)k];
                out.at(f, m) = std::log10(std::max(acc, 1e-5));
            }
        }
        return out;
    };
    Mat la = logmel(a.samples), lb = logmel(b.samples);
    real want = 0;
    for (size_t i = 0; i < la.v.size(); ++i) want += std::abs(la.v[i] - lb.v[i]);
    want /= (real)la.v.size();
    REQUIRE(got == Catch::Approx(want).margin(1e-5));
}

TEST_CASE("discriminator outputs are finite, deterministic, and scale with config") {
    Rng rng(92);
    DiscriminatorConfig cfg;
    cfg.periods = {2, 3};
    cfg.band_ffts = {64};
    cfg.channels = 4;
    cfg.layers = 2;
    Discriminator d(cfg, rng);
    REQUIRE(d.count() == 3);

    Tensor zero = Tensor::zeros({256});
    auto outs = d.forward(zero);
    REQUIRE(outs.size() == 3);
    for (const auto& o : outs)
        for (real v : o.logits.values()) REQUIRE(std::isfinite(v));

    Tensor x = random_tensor({256}, rng, 0.4, false);
    auto a = d.forward(x);
    auto b = d.forward(x);
    for (size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].logits.values() == b[i].logits.values());
        REQUIRE(a[i].features.size() == b[i].features.size());
    }

    DiscriminatorConfig doubled = cfg;
    doubled.periods = {2, 3, 5, 7};
    doubled.band_ffts = {64, 32};
    Rng rng2(93);
    Discriminator d2(doubled, rng2);
    REQUIRE(d2.forward(x).size() == 2 * outs.size());
}

TEST_CASE("gan losses: matched features and confident logits hit their closed forms") {
    Rng rng(94);
    auto mk = [&rng](real logit_value, long n) {
        DiscOutput o;
        o.logits = Tensor::from_data({1, n}, std::vector<real>((size_t)n, logit_value), false);
        o.features.push_back(random_tensor({2, 3}, rng, 1.0, false));
        return o;
    };
    DiscOutput real_o = mk(0.7, 4), fake_o = mk(1.0, 4);
    fake_o.features[0] = Tensor::from_data({2, 3}, real_o.features[0].values(), false);
    GanLosses g = gan_losses({real_o}, {fake_o});
    REQUIRE(g.feature_match.item() == 0.0);          // identical feature maps
    REQUIRE(g.generator_adv.item() == 0.0);          // fake logits exactly 1
    REQUIRE(g.discriminator.item() ==
            Catch::Approx((0.3 * 0.3) + 1.0).epsilon(1e-12));  // (1-0.7)^2 + (1-0)^2

    // random structures against a scalar oracle
    std::vector<DiscOutput> reals, fakes;
    for (int i = 0; i < 3; ++i) {
        DiscOutput r, f;
        r.logits = random_tensor({2, 5}, rng, 1.0, false);
        f.logits = random_tensor({2, 5}, rng, 1.0, false);
        r.features.push_back(random_tensor({3, 4}, rng, 1.0, false));
        f.features.push_back(random_tensor({3, 4}, rng, 1.0, false));
        reals.push_back(r);
        fakes.push_back(f);
    }
    GanLosses got = gan_losses(reals, fakes);
    real gen = 0, disc = 0, feat = 0;
    for (int i = 0; i < 3; ++i) {
        real g1 = 0, d1 = 0, d0 = 0, fm = 0;
        for (long j = 0; j < 10; ++j) {
            const real rv = reals[(size_t)i].logits.data()[j];
            const real fv = fakes[(size_t)i].logits.data()[j];
            g1 += (fv - 1) * (fv - 1) / 10.0;
            d1 += (rv - 1) * (rv - 1) / 10.0;
            d0 += fv * fv / 10.0;
        }
        for (long j = 0; j < 12; ++j)
            fm += std::abs(fakes[(size_t)i].features[0].data()[j] -
                           reals[(size_t)i].features[0].data()[j]) /
                  12.0;
        gen += g1;
        disc += d1 + d0;
        feat += fm;
    }
    REQUIRE(got.generator_adv.item() == Catch::Approx(gen / 3.0).epsilon(1e-12));
    REQUIRE(got.discriminator.item() == Catch::Approx(disc / 3.0).epsilon(1e-12));
    REQUIRE(got.feature_match.item() == Catch::Approx(feat / 3.0).epsilon(1e-12));
}

TEST_CASE("learning rate schedule follows the closed form") {
    // constant when gamma is 1
    {
        TrainConfig t = micro_train();
        t.lr_gamma = 1.0;
        Trainer tr(micro_model(), t, 5);
        REQUIRE(tr.current_lr() == Catch::Approx(1e-3));
    }
    // the published constants: 1e-4 * 0.999996^400000
    const real lr = 1e-4 * std::pow(0.999996, 400000.0);
    REQUIRE(lr == Catch::Approx(2.019e-5).epsilon(1e-3));

    // closed form equals iterated decay within float tolerance
    real iterated = 1e-4;
    for (int i = 0; i < 5000; ++i) iterated *= 0.999996;
    REQUIRE(iterated == Catch::Approx(1e-4 * std::pow(0.999996, 5000.0)).epsilon(1e-9));
}

TEST_CASE("train_step runs and logs every configured term") {
    TempDir tmp;
    write_micro_corpus(tmp.str("corpus"));
    DatasetOptions dopt;
    dopt.phonetic = TeacherMode::mock;
    dopt.lexical = TeacherMode::mock;
    dopt.mock_seed = 3;
    CodecConfig mc = micro_model();
    Dataset ds = Dataset::load(tmp.str("corpus"), mc, dopt);
    REQUIRE(ds.size() == 2);

    Trainer tr(mc, micro_train(), 11);
    StepLog log = tr.train_step(ds);
    for (const char* name : {"disc", "mel", "adv", "feat", "codebook", "commitment", "kd_phn",
                             "kd_lex", "total"})
        REQUIRE(std::isfinite(log.loss(name)));
    REQUIRE(log.utilization.size() == 4);  // lexical, phonetic, acoustic_1, acoustic_2
    REQUIRE(tr.step() == 1);
}

TEST_CASE("mel-only weights leave the discriminator untouched") {
    TempDir tmp;
    write_micro_corpus(tmp.str("corpus"));
    CodecConfig mc = micro_model();
    Dataset ds = Dataset::load(tmp.str("corpus"), mc, {});

    TrainConfig t = micro_train();
    t.weights = LossWeights{};
    t.weights.mel = 1.0;
    t.weights.adversarial = 0.0;
    t.weights.feature_match = 0.0;
    t.weights.codebook = 1.0;
    t.weights.commitment = 0.25;
    Trainer tr(mc, t, 13);
    REQUIRE_FALSE(tr.adversarial_enabled());

    ParamMap before = tr.discriminator_parameters();
    std::vector<std::vector<real>> snap;
    for (auto& [name, p] : before) snap.push_back(p.values());
    StepLog log = tr.train_step(ds);
    ParamMap after = tr.discriminator_parameters();
    for (size_t i = 0; i < after.size(); ++i) REQUIRE(after[i].second.values() == snap[i]);

    // adversarial terms are absent from the log
    REQUIRE_THROWS_AS(log.loss("adv"), Error);
    REQUIRE_THROWS_AS(log.loss("disc"), Error);
}

TEST_CASE("nan parameters abort naming the first bad term") {
    TempDir tmp;
    write_micro_corpus(tmp.str("corpus"));
    CodecConfig mc = micro_model();
    Dataset ds = Dataset::load(tmp.str("corpus"), mc, {});
    Trainer tr(mc, micro_train(), 17);
    // poison one encoder weight
    ParamMap params = tr.model().parameters();
    params[0].second.data()[0] = std::numeric_limits<real>::quiet_NaN();
    REQUIRE_THROWS_AS(tr.train_step(ds), TrainAbort);
    try {
        tr.train_step(ds);
    } catch (const TrainAbort& e) {
        REQUIRE(std::string(e.what()).find("first bad term") != std::string::npos);
    }
}

TEST_CASE("train_loop with zero steps writes nothing") {
    TempDir tmp;
    write_micro_corpus(tmp.str("corpus"));
    CodecConfig mc = micro_model();
    Dataset ds = Dataset::load(tmp.str("corpus"), mc, {});
    Trainer tr(mc, micro_train(), 19);
    StepLog log = tr.train_loop(ds, 0, 5, tmp.str("out"));
    REQUIRE(log.step == 0);
    REQUIRE(tr.step() == 0);
    REQUIRE_FALSE(fs::exists(tmp.str("out/final.hack")));
}

TEST_CASE("seeded reruns reproduce the loss log exactly") {
    TempDir tmp;
    write_micro_corpus(tmp.str("corpus"));
    CodecConfig mc = micro_model();
    DatasetOptions dopt;
    dopt.phonetic = TeacherMode::mock;
    dopt.lexical = TeacherMode::mock;
    dopt.mock_seed = 5;
    Dataset ds = Dataset::load(tmp.str("corpus"), mc, dopt);

    auto run = [&](const std::string& out) {
        Trainer tr(mc, micro_train(), 23);
        tr.train_loop(ds, 4, 0, out);
        std::ifstream f(out + "/train_log.csv");
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    const std::string a = run(tmp.str("run_a"));
    const std::string b = run(tmp.str("run_b"));
    REQUIRE(!a.empty());
    REQUIRE(a == b);
}

TEST_CASE("resume from checkpoint matches an uninterrupted run bit-exactly") {
    TempDir tmp;
    write_micro_corpus(tmp.str("corpus"));
    CodecConfig mc = micro_model();
    DatasetOptions dopt;
    dopt.phonetic = TeacherMode::mock;
    dopt.mock_seed = 6;
    Dataset ds = Dataset::load(tmp.str("corpus"), mc, dopt);

    Trainer straight(mc, micro_train(), 29);
    straight.train_loop(ds, 6, 0, tmp.str("straight"));

    Trainer first(mc, micro_train(), 29);
    first.train_loop(ds, 3, 0, tmp.str("part1"));
    first.save(tmp.str("part1/mid.hack"));

    Trainer second(mc, micro_train(), 999);  // seed is irrelevant after resume
    second.resume(tmp.str("part1/mid.hack"));
    REQUIRE(second.step() == 3);
    second.train_loop(ds, 3, 0, tmp.str("part2"));

    ParamMap a = straight.model().parameters();
    ParamMap b = second.model().parameters();
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) REQUIRE(a[i].second.values() == b[i].second.values());

    ParamMap da = straight.discriminator_parameters();
    ParamMap db = second.discriminator_parameters();
    for (size_t i = 0; i < da.size(); ++i)
        REQUIRE(da[i].second.values() == db[i].second.values());
}

TEST_CASE("ema-style training keeps codebooks in sync through resume") {
    TempDir tmp;
    write_micro_corpus(tmp.str("corpus"));
    CodecConfig mc = micro_model();
    mc.branches = Branches::none;
    mc.kd_rvq_layer = 1;
    mc.quantizer_style = QuantizerStyle::ema;
    mc.code_dim_acoustic = mc.embed_dim;
    DatasetOptions dopt;
    dopt.phonetic = TeacherMode::mock;
    dopt.mock_seed = 8;
    Dataset ds = Dataset::load(tmp.str("corpus"), mc, dopt);

    Trainer straight(mc, micro_train(), 31);
    straight.train_loop(ds, 4, 0, tmp.str("s"));

    Trainer part(mc, micro_train(), 31);
    part.train_loop(ds, 2, 0, tmp.str("p1"));
    part.save(tmp.str("p1/mid.hack"));
    Trainer resumed(mc, micro_train(), 77);
    resumed.resume(tmp.str("p1/mid.hack"));
    resumed.train_loop(ds, 2, 0, tmp.str("p2"));

    ParamMap a = straight.model().parameters();
    ParamMap b = resumed.model().parameters();
    for (size_t i = 0; i < a.size(); ++i) REQUIRE(a[i].second.values() == b[i].second.values());
}
