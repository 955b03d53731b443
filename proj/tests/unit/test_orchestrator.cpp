// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>

#include "r2m/orchestrator.hpp"
#include "r2m/util.hpp"

using namespace r2m;
using namespace r2m::orchestrator;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = R2M_FIXTURE_DIR;
const fs::path kData = R2M_DATA_DIR;

std::string crops_reply() {
    return "###parse###" + nlohmann::json::parse(read_file(kFixtures / "crops_gold.json")).dump();
}

struct Fixture {
    registry::Registry reg = registry::load_zoo(kData / "zoo.json");
    textmatch::Taxonomy tax = textmatch::Taxonomy::load(kData / "taxonomy.tsv");
    trainer::SimulatedTrainer sim;

    PipelineServices services(llm::ChatClient& client, trainer::TrainerExecutor* executor = nullptr) {
        return {&reg, &tax, &client, executor ? executor : &sim};
    }
};

PipelineOptions fixed_options(hpo::Strategy strategy = hpo::Strategy::bayes_gp, std::uint64_t seed = 1) {
    PipelineOptions o;
    o.strategy = strategy;
    o.seed = seed;
    o.clock = [] { return std::string("2024-01-01T00:00:00Z"); };
    return o;
}

struct AlwaysFails final : trainer::TrainerExecutor {
    trainer::TrainResult train_and_eval(const trainer::TrainJob&) override {
        return {"accuracy", 0.0, trainer::TrainStatus::failed, "cuda error"};
    }
};

fs::path scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("r2m_unit_" + name + "_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST(RequestId, StableDigestOfTrimmedText) {
    const std::string text = read_file(kFixtures / "crops_request.txt");
    EXPECT_EQ(derive_request_id(text), "req-c956b8355578");
    EXPECT_EQ(derive_request_id("  " + text + "\n\n"), derive_request_id(text));
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(DeploymentPlan, HonoursRequestOrFallsBack) {
    registry::ModelCard card;
    card.name = "m";
    schema::RequestConfig cfg;
    auto plan = make_deployment_plan(schema::canonicalize(cfg), card);
    EXPECT_EQ(plan.device, schema::Device::cpu);
    EXPECT_EQ(plan.engine, schema::Engine::onnxruntime);
    EXPECT_EQ(plan.notes.size(), 2u);
    EXPECT_TRUE(plan.setting_digest.empty());

    cfg.deploy.device = schema::Device::gpu;
    cfg.deploy.inference_engine = schema::Engine::openvino;
    const hpo::HyperparameterSetting s{3000, 8, hpo::Optimizer::SGD, 1e-3, 1e-4, hpo::Schedule::StepLR};
    plan = make_deployment_plan(schema::canonicalize(cfg), card, s);
    EXPECT_EQ(plan.device, schema::Device::gpu);
    EXPECT_EQ(plan.engine, schema::Engine::openvino);
    EXPECT_TRUE(plan.notes.empty());
    EXPECT_EQ(plan.setting_digest, hpo::setting_digest(s));
    EXPECT_EQ(deployment_plan_from_json(nlohmann::json::parse(to_json(plan).dump())), plan);
}

TEST(Pipeline, CropsRequestCompletes) {
    Fixture f;
    llm::ScriptedChatClient client({crops_reply()});
    const auto a = run_pipeline(read_file(kFixtures / "crops_request.txt"), fixed_options(), f.services(client));
    ASSERT_EQ(a.status, RunStatus::completed) << a.error;
    EXPECT_EQ(a.request_id, "req-c956b8355578");
    EXPECT_EQ(a.run_id, "req-c956b8355578-1");
    ASSERT_TRUE(a.data);
    EXPECT_EQ(a.data->chosen.at(0).card.name, "agri1k");
    ASSERT_TRUE(a.model);
    EXPECT_EQ(a.model->name, "vit-large-p16_in21k-pre_3rdparty_in1k-384px");
    ASSERT_TRUE(a.hpo);
    EXPECT_EQ(a.hpo->trials.size(), 5u);
    EXPECT_GT(a.hpo->best.metric_value, 0.0);
    ASSERT_TRUE(a.plan);
    EXPECT_EQ(a.plan->engine, schema::Engine::ncnn);
    EXPECT_EQ(a.plan->device, schema::Device::cpu);
    ASSERT_EQ(a.timings.size(), 5u);
    EXPECT_EQ(a.timings.front().stage, "understand");
    EXPECT_EQ(a.timings.back().stage, "deploy");
    EXPECT_EQ(a.versions_digest.size(), 64u);
}

TEST(Pipeline, DeterministicUnderFixedClock) {
    Fixture f;
    llm::ScriptedChatClient c1({crops_reply()});
    llm::ScriptedChatClient c2({crops_reply()});
    const std::string text = read_file(kFixtures / "crops_request.txt");
    EXPECT_EQ(run_pipeline(text, fixed_options(), f.services(c1)),
              run_pipeline(text, fixed_options(), f.services(c2)));
}

TEST(Pipeline, CorruptParseStopsAtUnderstanding) {
    Fixture f;
    llm::ScriptedChatClient client({"###parse###{\"data\": {", "###parse###{\"data\": {"});
    const auto a = run_pipeline("Classify crops.", fixed_options(), f.services(client));
    EXPECT_EQ(a.status, RunStatus::failed_understanding);
    EXPECT_FALSE(a.config);
    EXPECT_FALSE(a.model);
    EXPECT_EQ(a.timings.size(), 1u);
    EXPECT_NE(a.error.find("understand"), std::string::npos);
}

TEST(Pipeline, NoTaskCardIsFailedSelection) {
    Fixture f;
    f.reg = registry::parse_zoo(R"({"data": [], "models": []})");
    llm::ScriptedChatClient client({crops_reply()});
    const auto a = run_pipeline("Classify crops.", fixed_options(), f.services(client));
    EXPECT_EQ(a.status, RunStatus::failed_selection);
    EXPECT_TRUE(a.config);
    EXPECT_FALSE(a.model);
}

TEST(Pipeline, NothingCoveredIsFailedSelection) {
    Fixture f;
    llm::ScriptedChatClient client({R"(###parse###{"data": {"object": ["submarine"]}, "model": {"task": "keypoint"}})"});
    const auto a = run_pipeline("Find submarine poses.", fixed_options(), f.services(client));
    EXPECT_EQ(a.status, RunStatus::failed_selection);
    EXPECT_FALSE(a.warnings.empty());
}

TEST(Pipeline, AllRoundsFailingIsFailedTraining) {
    Fixture f;
    AlwaysFails failing;
    llm::ScriptedChatClient client({crops_reply()});
    auto o = fixed_options(hpo::Strategy::random);
    o.budget = 3;
    const auto a = run_pipeline("Classify crops.", o, f.services(client, &failing));
    EXPECT_EQ(a.status, RunStatus::failed_training);
    ASSERT_TRUE(a.hpo);
    EXPECT_EQ(a.hpo->trials.size(), 3u);
    EXPECT_FALSE(a.plan);
}

TEST(Pipeline, MissingServicesThrow) {
    EXPECT_THROW(run_pipeline("x", fixed_options(), PipelineServices{}), std::invalid_argument);
}

TEST(Artifacts, RandomRoundTripsThroughDisk) {
    Fixture f;
    const auto dir = scratch_dir("roundtrip");
    const std::string text = read_file(kFixtures / "crops_request.txt");
    Rng rng(314);
    const hpo::Strategy strategies[] = {hpo::Strategy::random, hpo::Strategy::bayes_gp, hpo::Strategy::bayes_rf};
    for (int i = 0; i < 100; ++i) {
        const bool corrupt = rng.index(5) == 0;
        llm::ScriptedChatClient client(corrupt ? std::vector<std::string>{"bad", "bad"}
                                               : std::vector<std::string>{crops_reply()});
        auto o = fixed_options(strategies[rng.index(3)], rng.next_u64());
        o.budget = static_cast<int>(rng.uniform_int(1, 6));
        auto a = run_pipeline(text, o, f.services(client));
        if (rng.index(2) == 0) a.warnings.push_back("note " + std::to_string(rng.next_u64()));
        const auto path = persist_run(a, dir);
        ASSERT_EQ(load_run(path), a) << "iteration " << i;
        ASSERT_EQ(load_run(path / "artifact.json"), a);
    }
    fs::remove_all(dir);
}

TEST(Artifacts, SideFilesWritten) {
    Fixture f;
    const auto dir = scratch_dir("sidefiles");
    llm::ScriptedChatClient client({crops_reply()});
    const auto a = run_pipeline("Classify crops.", fixed_options(), f.services(client));
    const auto path = persist_run(a, dir);
    EXPECT_EQ(hpo::trials_from_jsonl(read_file(path / "trace.jsonl")), a.hpo->trials);
    EXPECT_EQ(deployment_plan_from_json(nlohmann::json::parse(read_file(path / "plan.json"))), *a.plan);
    fs::remove_all(dir);
}

TEST(Artifacts, TamperingIsDetected) {
    Fixture f;
    const auto dir = scratch_dir("tamper");
    llm::ScriptedChatClient client({crops_reply()});
    const auto path = persist_run(run_pipeline("Classify crops.", fixed_options(), f.services(client)), dir);
    std::string text = read_file(path / "artifact.json");
    const auto at = text.find("\"budget\": 5");
    ASSERT_NE(at, std::string::npos);
    text.replace(at, 11, "\"budget\": 6");
    write_file(path / "artifact.json", text);
    EXPECT_THROW(load_run(path), IntegrityError);
    write_file(path / "artifact.json", "{not json");
    EXPECT_THROW(load_run(path), IntegrityError);
    write_file(path / "artifact.json", "{}");
    EXPECT_THROW(load_run(path), IntegrityError);
    EXPECT_THROW(load_run(dir / "missing"), IoError);
    fs::remove_all(dir);
}

TEST(Artifacts, RejectsUnsafeRunIds) {
    RunArtifact a;
    for (const char* id : {"", "..", "a/b"}) {
        a.run_id = id;
        EXPECT_THROW(persist_run(a, fs::temp_directory_path()), IoError) << id;
    }
}

TEST(RunStatusNames, RoundTrip) {
    for (auto s : {RunStatus::completed, RunStatus::failed_understanding, RunStatus::failed_selection,
                   RunStatus::failed_training}) {
        EXPECT_EQ(run_status_from_string(to_string(s)), s);
    }
    EXPECT_FALSE(run_status_from_string("done"));
}
