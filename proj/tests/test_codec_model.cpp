#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "hac/codec/checkpoint.hpp"
#include "hac/codec/model.hpp"
#include "hac/distill/teacher.hpp"
#include "test_util.hpp"

using namespace hac;
using hac::testing::random_tensor;

namespace {

// tiny-capacity config with arbitrary topology knobs
CodecConfig tiny_config(std::vector<long> strides, long d = 12, long n_acoustic = 2,
                        Branches branches = Branches::phonetic_lexical) {
    CodecConfig c;
    c.sample_rate = 8000;
    c.encoder_strides = std::move(strides);
    c.embed_dim = d;
    c.acoustic_layers = n_acoustic;
    c.acoustic_codebook = 8;
    c.code_dim_acoustic = 4;
    c.phonetic_codebook = 8;
    c.lexical_codebook = 8;
    c.code_dim_phonetic = 6;
    c.code_dim_lexical = 6;
    c.branches = branches;
    c.encoder_channels.assign(c.encoder_strides.size() + 1, 6);
    c.decoder_channels.assign(c.encoder_strides.size() + 1, 6);
    c.residual_units = 1;
    c.transformer = TransformerConfig{1, 2, 8, 16, 3, 2, true};
    c.kd_phonetic_dim = 5;
    c.kd_lexical_dim = 4;
    if (branches == Branches::none) c.kd_rvq_layer = 1;
    return c;
}

Waveform noise_wave(long rate, long samples, std::uint64_t seed) {
    Rng rng(seed);
    Waveform w;
    w.sample_rate = rate;
    w.samples.resize((size_t)samples);
    for (auto& s : w.samples) s = 0.3 * std::tanh(rng.normal());
    return w;
}

}  // namespace

TEST_CASE("encode frame arithmetic") {
    Rng rng(61);
    // stride product 320, tiny capacity
    CodecConfig c = tiny_config({2, 4, 5, 8});
    c.sample_rate = 16000;
    CodecModel m(c, rng);
    REQUIRE(m.downsample_factor() == 320);

    REQUIRE(m.encode(noise_wave(16000, 60800, 1)).dim(0) == 190);
    REQUIRE(m.encode(noise_wave(16000, 320, 2)).dim(0) == 1);
    REQUIRE_THROWS_WITH(m.encode(noise_wave(16000, 319, 3)),
                        Catch::Matchers::ContainsSubstring("shorter than one frame"));

    Rng rng2(62);
    CodecConfig c2 = tiny_config({2, 2});
    CodecModel m2(c2, rng2);
    REQUIRE(m2.encode(noise_wave(8000, 12, 4)).dim(0) == 3);
    REQUIRE(m2.encode(noise_wave(8000, 13, 5)).dim(0) == 3);  // right-truncation
}

TEST_CASE("branch encoder keeps frame count and projects back to D") {
    Rng rng(63);
    CodecConfig c = tiny_config({2, 2});
    CodecModel m(c, rng);
    Tensor z1 = m.encode(noise_wave(8000, 4, 6));
    REQUIRE(z1.shape() == Shape{1, c.embed_dim});
    Tensor b1 = m.branch_encode(z1, TeacherRole::phonetic);
    REQUIRE(b1.shape() == Shape{1, c.embed_dim});

    Tensor z = m.encode(noise_wave(8000, 40, 7));
    REQUIRE(m.branch_encode(z, TeacherRole::lexical).shape() == Shape{10, c.embed_dim});
}

TEST_CASE("branch encoder is permutation-equivariant without positional embeddings") {
    Rng rng(64);
    CodecConfig c = tiny_config({2, 2});
    c.transformer.use_positional = false;
    CodecModel m(c, rng);
    Tensor z = random_tensor({6, c.embed_dim}, rng, 1.0, false);
    Tensor out = m.branch_encode(z, TeacherRole::phonetic);

    // reverse the frames
    std::vector<real> perm((size_t)z.numel());
    for (long i = 0; i < 6; ++i)
        for (long j = 0; j < c.embed_dim; ++j)
            perm[(size_t)(i * c.embed_dim + j)] = z.data()[(5 - i) * c.embed_dim + j];
    Tensor out_perm =
        m.branch_encode(Tensor::from_data({6, c.embed_dim}, perm), TeacherRole::phonetic);
    for (long i = 0; i < 6; ++i)
        for (long j = 0; j < c.embed_dim; ++j)
            REQUIRE(out_perm.data()[i * c.embed_dim + j] ==
                    Catch::Approx(out.data()[(5 - i) * c.embed_dim + j]).margin(1e-12));
}

TEST_CASE("full-size branch stack produces F x 1024 from the 768-dim transformer") {
    Rng rng(65);
    CodecConfig c = tiny_config({2, 2});
    c.embed_dim = 1024;
    c.transformer = TransformerConfig{4, 8, 768, 3072, 15, 16, true};
    BranchEncoder branch(c.embed_dim, c.transformer, rng);
    Tensor z = random_tensor({4, 1024}, rng, 1.0, false);
    REQUIRE(branch.forward(z).shape() == Shape{4, 1024});
}

TEST_CASE("decode length equals frames times the stride product") {
    Rng rng(66);
    CodecConfig c = tiny_config({2, 4, 5, 8});
    c.sample_rate = 16000;
    CodecModel m(c, rng);
    Tensor one = random_tensor({1, c.embed_dim}, rng, 1.0, false);
    Tensor w = m.decode_embeddings(one);
    REQUIRE(w.shape() == Shape{320});

    Tensor zeros = Tensor::zeros({4, c.embed_dim});
    Tensor wz = m.decode_embeddings(zeros);
    for (real v : wz.values()) REQUIRE(std::isfinite(v));

    // full pipeline at the 320x factor: 3.8 s in, 60800 samples out
    ForwardOutput out = m.forward(noise_wave(16000, 60800, 8));
    REQUIRE(out.recon.shape() == Shape{60800});
    for (real v : out.recon.values()) {
        REQUIRE(std::isfinite(v));
        REQUIRE(std::abs(v) <= 1.0);
    }
}

TEST_CASE("tokens per frame follow the bottleneck topology") {
    {
        Rng rng(67);
        CodecConfig c = tiny_config({2, 2}, 12, 7, Branches::phonetic_lexical);
        CodecModel m(c, rng);
        ForwardOutput out = m.forward(noise_wave(8000, 64, 9));
        REQUIRE(out.tokens.num_layers() == 9);
        REQUIRE(out.tokens.layers[0].name == "lexical");
        REQUIRE(out.tokens.layers[1].name == "phonetic");
        REQUIRE(out.tokens.layers[2].name == "acoustic_1");
        REQUIRE(out.z_qp.defined());
        REQUIRE(out.z_ql.defined());
    }
    {
        Rng rng(68);
        CodecConfig c = tiny_config({2, 2}, 12, 8, Branches::phonetic_only);
        CodecModel m(c, rng);
        ForwardOutput out = m.forward(noise_wave(8000, 64, 10));
        REQUIRE(out.tokens.num_layers() == 9);
        REQUIRE(out.tokens.layers[0].name == "phonetic");
        REQUIRE(!out.z_ql.defined());
    }
    {
        Rng rng(69);
        CodecConfig c = tiny_config({2, 2}, 12, 2, Branches::phonetic_lexical);
        CodecModel m(c, rng);
        REQUIRE(m.forward(noise_wave(8000, 64, 11)).tokens.num_layers() == 4);
    }
}

TEST_CASE("forward is deterministic given fixed parameters") {
    Rng rng(70);
    CodecConfig c = tiny_config({2, 4});
    CodecModel m(c, rng);
    Waveform x = noise_wave(8000, 160, 12);
    ForwardOutput a = m.forward(x);
    ForwardOutput b = m.forward(x);
    REQUIRE(a.tokens == b.tokens);
    REQUIRE(a.recon.values() == b.recon.values());
}

TEST_CASE("fusion drops the lexical term in phonetic-only mode") {
    Rng rng(71);
    CodecConfig c = tiny_config({2, 2}, 12, 2, Branches::phonetic_only);
    CodecModel m(c, rng);
    ForwardOutput out = m.forward(noise_wave(8000, 32, 13));
    for (long i = 0; i < out.z_q.numel(); ++i)
        REQUIRE(out.z_q.data()[i] ==
                Catch::Approx(out.z_qa.data()[i] + out.z_qp.data()[i]).margin(1e-12));
}

TEST_CASE("kd losses appear when teachers are supplied") {
    Rng rng(72);
    CodecConfig c = tiny_config({2, 2});
    CodecModel m(c, rng);
    Waveform x = noise_wave(8000, 64, 14);
    const long f = m.num_frames_for(64);

    Rng trng(15);
    Mat phn(f, c.kd_phonetic_dim);
    trng.fill_normal(phn.v);
    Mat lex(f, c.kd_lexical_dim);
    trng.fill_normal(lex.v);
    std::vector<bool> mask((size_t)f, true);
    mask[0] = false;

    TeacherBatch tb;
    tb.phonetic = &phn;
    tb.lexical = &lex;
    tb.lexical_mask = &mask;
    ForwardOutput out = m.forward(x, tb);
    REQUIRE(out.losses.count("kd_phn") == 1);
    REQUIRE(out.losses.count("kd_lex") == 1);
    REQUIRE(std::isfinite(out.losses.at("kd_phn").item()));
    REQUIRE(out.losses.at("kd_phn").item() > 0.0);

    ForwardOutput plain = m.forward(x);
    REQUIRE(plain.losses.count("kd_phn") == 0);
}

TEST_CASE("st-style topology attaches distillation to the first residual stage") {
    Rng rng(73);
    CodecConfig c = tiny_config({2, 2}, 12, 3, Branches::none);
    c.quantizer_style = QuantizerStyle::ema;
    c.code_dim_acoustic = 12;  // identity lookup
    c.kd_rvq_layer = 1;
    CodecModel m(c, rng);
    Waveform x = noise_wave(8000, 32, 16);
    const long f = m.num_frames_for(32);
    Mat phn(f, c.kd_phonetic_dim);
    Rng trng(17);
    trng.fill_normal(phn.v);
    TeacherBatch tb;
    tb.phonetic = &phn;
    ForwardOutput out = m.forward(x, tb);
    REQUIRE(out.tokens.num_layers() == 3);
    REQUIRE(out.tokens.layers[0].name == "acoustic_1");
    REQUIRE(out.losses.count("kd_phn") == 1);
    // ema style: codebook loss contributes nothing
    REQUIRE(out.losses.at("codebook").item() == 0.0);
}

TEST_CASE("gradient flows from the reconstruction loss into encoder parameters") {
    Rng rng(74);
    CodecConfig c = tiny_config({2, 2}, 8, 1, Branches::none);
    c.kd_rvq_layer = 1;
    c.acoustic_codebook = 4;
    c.code_dim_acoustic = 8;
    CodecModel m(c, rng);
    m.set_passthrough(true);  // differentiable surrogate; the straight-through
                              // backward equals this path's gradient
    Waveform x = noise_wave(8000, 24, 18);
    Tensor target = random_tensor({24}, rng, 0.1, false);

    ParamMap params = trainable(m.parameters());
    auto loss_fn = [&] {
        ForwardOutput out = m.forward(x);
        return mse_mean(out.recon, target);
    };
    zero_grads(params);
    loss_fn().backward();

    // spot-check three parameters against finite differences
    std::vector<std::string> names{"enc.init.w", "enc.block1.down.w", "enc.final_conv.b"};
    for (const auto& want : names) {
        Tensor p;
        for (auto& [name, t] : params)
            if (name == want) p = t;
        REQUIRE(p.defined());
        REQUIRE(p.has_grad());
        std::vector<real> analytic = p.grad();
        std::vector<real> numeric =
            hac::testing::numeric_grad(p, [&] { return loss_fn().item(); }, 1e-5);
        REQUIRE(hac::testing::max_rel_err(analytic, numeric, 1e-6) < 1e-3);
    }
}

TEST_CASE("token encode/decode round trip through the model") {
    Rng rng(75);
    CodecConfig c = tiny_config({2, 4});
    CodecModel m(c, rng);
    Waveform x = noise_wave(8000, 80, 19);
    TokenMatrix t = m.encode_tokens(x);
    REQUIRE(t.num_frames() == 10);
    Waveform recon = m.decode_tokens(t);
    REQUIRE(recon.size() == 80);
    REQUIRE(recon.sample_rate == 8000);

    // mismatched codebook size must name the layer
    TokenMatrix bad = t;
    bad.layers[1].codebook_size = 16;
    REQUIRE_THROWS_WITH(m.decode_tokens(bad),
                        Catch::Matchers::ContainsSubstring("phonetic"));
}

TEST_CASE("checkpoint round trip restores parameters bit-exactly") {
    namespace fs = std::filesystem;
    const fs::path tmp = fs::temp_directory_path() / "hac_ckpt_test";
    fs::create_directories(tmp);
    const std::string path = (tmp / "model.hack").string();

    Rng rng(76);
    CodecConfig c = tiny_config({2, 2});
    CodecModel m(c, rng);
    save_checkpoint(path, m, 42);

    CheckpointMeta meta;
    CodecModel loaded = load_model(path, &meta);
    REQUIRE(meta.step == 42);
    REQUIRE(canonical_config_text(loaded.config()) == canonical_config_text(c));

    ParamMap a = m.parameters(), b = loaded.parameters();
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].first == b[i].first);
        REQUIRE(a[i].second.values() == b[i].second.values());
    }

    // config echo guards decode against the wrong model
    Waveform x = noise_wave(8000, 32, 20);
    REQUIRE(m.encode_tokens(x) == loaded.encode_tokens(x));
    fs::remove_all(tmp);
}

TEST_CASE("preset topology assertions") {
    Preset st = make_preset("st-10");
    REQUIRE(st.model.branches == Branches::none);
    REQUIRE(st.model.quantizer_style == QuantizerStyle::ema);
    REQUIRE(st.model.acoustic_layers == 9);
    REQUIRE(st.model.acoustic_codebook == 1024);  // 10-bit
    REQUIRE(st.model.kd_rvq_layer == 1);
    REQUIRE(st.model.tokens_per_frame() == 9);

    Preset dac = make_preset("dac-10");
    REQUIRE(dac.model.branches == Branches::phonetic_only);
    REQUIRE(dac.model.acoustic_layers == 8);
    REQUIRE(dac.model.tokens_per_frame() == 9);
    REQUIRE(dac.model.code_dim_phonetic == 128);
    REQUIRE(dac.model.code_dim_acoustic == 8);
    REQUIRE_FALSE(dac.model.branch_transformer_phonetic);

    Preset dac14t = make_preset("dac-14-t");
    REQUIRE(dac14t.model.phonetic_codebook == 16384);
    REQUIRE(dac14t.model.branch_transformer_phonetic);

    Preset hac = make_preset("hac-14");
    REQUIRE(hac.model.branches == Branches::phonetic_lexical);
    REQUIRE(hac.model.acoustic_layers == 7);
    REQUIRE(hac.model.tokens_per_frame() == 9);
    REQUIRE(hac.model.bits_per_frame() == 98);
    REQUIRE(hac.model.frame_rate() == Catch::Approx(50.0));
    REQUIRE(hac.model.downsample_factor() == 320);

    // toy twins exist and validate
    for (const auto& name : preset_names()) REQUIRE(make_preset(name).model.name == name);
    REQUIRE(make_preset("hac-toy").model.branches == Branches::phonetic_lexical);
    REQUIRE(make_preset("hac-toy").model.sample_rate == 8000);
}
