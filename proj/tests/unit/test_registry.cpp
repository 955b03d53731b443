// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>

#include <fmt/format.h>

#include "r2m/registry.hpp"
#include "r2m/util.hpp"

using namespace r2m;
using namespace r2m::registry;

namespace {

const std::filesystem::path kData = R2M_DATA_DIR;
const std::filesystem::path kFixtures = R2M_FIXTURE_DIR;

schema::CanonicalConfig config_for(Task task) {
    schema::RequestConfig c;
    c.model.task = task;
    return schema::canonicalize(c);
}

std::string model_json(const std::string& name, Task task, double flops, double perf) {
    return fmt::format(
        R"j({{"name": "{}", "task": "{}", "params(M)": 10, "flops(G)": {}, "speed_ms": 5,
            "performance": {{"value": {}}}}})j",
        name, to_string(task), flops, perf);
}

}  // namespace

TEST(Zoo, BundledManifestHasTwelveModelsAndSixDatasets) {
    const auto reg = load_zoo(kData / "zoo.json");
    EXPECT_EQ(reg.models.size(), 12u);
    EXPECT_EQ(reg.data.size(), 6u);
    EXPECT_EQ(reg.digest.size(), 64u);
}

TEST(Zoo, EmptyManifestIsValid) {
    const auto reg = parse_zoo(R"({"data": [], "models": []})");
    EXPECT_TRUE(reg.models.empty());
    EXPECT_TRUE(reg.data.empty());
}

TEST(Zoo, DuplicateNamesAreRejected) {
    const std::string m = model_json("resnet34", Task::classification, 3.6, 73);
    EXPECT_THROW(parse_zoo(R"({"data": [], "models": [)" + m + "," + m + "]}"), DuplicateError);
}

TEST(Zoo, RejectsBadCards) {
    EXPECT_THROW(parse_zoo(R"({"data": [], "models": [{"name": "x", "task": "classification"}]})"), ManifestError);
    EXPECT_THROW(parse_zoo("[]"), ManifestError);
    EXPECT_THROW(parse_zoo("{not json"), Error);
}

TEST(Zoo, PercentPerformanceFoldedIntoUnitRange) {
    const auto reg = load_zoo(kData / "zoo.json");
    EXPECT_DOUBLE_EQ(reg.models.front().performance.value, 0.7362);
    EXPECT_EQ(reg.models.front().performance.name, "accuracy");
}

TEST(Zoo, CardsRoundTripThroughJson) {
    const auto reg = load_zoo(kData / "zoo.json");
    for (const auto& m : reg.models) EXPECT_EQ(model_card_from_json(to_json(m)), m);
    for (const auto& d : reg.data) EXPECT_EQ(data_card_from_json(to_json(d)), d);
}

TEST(SelectData, CropsPicksAgri1k) {
    const auto reg = load_zoo(kData / "zoo.json");
    const auto tax = textmatch::Taxonomy::load(kData / "taxonomy.tsv");
    const auto gold = schema::parse_request_config(read_file(kFixtures / "crops_gold.json"), schema::ParseMode::strict);
    const auto sel = select_data(schema::canonicalize(gold), reg, tax);
    ASSERT_EQ(sel.chosen.size(), 1u);
    EXPECT_EQ(sel.chosen[0].card.name, "agri1k");
    EXPECT_TRUE(sel.uncovered.empty());
    EXPECT_EQ(sel.total_images, 1200);
    EXPECT_EQ(sel.class_mapping.at("crops"),
              (std::vector<std::string>{"crops", "wheat", "corn", "rice", "soybean"}));
}

TEST(SelectData, RequestedDatasetRanksFirst) {
    const auto reg = load_zoo(kData / "zoo.json");
    auto c = config_for(Task::detection);
    c.config.data.specific = {"coco"};
    c.config.data.object = {"car"};
    const auto sel = select_data(c, reg, textmatch::Taxonomy{});
    ASSERT_FALSE(sel.chosen.empty());
    EXPECT_EQ(sel.chosen[0].card.name, "coco2017");
}

TEST(SelectData, NoObjectsPicksFirstTaskCard) {
    const auto reg = load_zoo(kData / "zoo.json");
    const auto sel = select_data(config_for(Task::detection), reg, textmatch::Taxonomy{});
    ASSERT_EQ(sel.chosen.size(), 1u);
    EXPECT_EQ(sel.chosen[0].card.name, "coco2017");
}

TEST(SelectData, HypernymCoveredThroughTaxonomy) {
    const auto reg = load_zoo(kData / "zoo.json");
    const auto tax = textmatch::Taxonomy::load(kData / "taxonomy.tsv");
    auto c = config_for(Task::detection);
    c.config.data.object = {"vehicle"};
    const auto sel = select_data(c, reg, tax);
    EXPECT_TRUE(sel.uncovered.empty());
    ASSERT_FALSE(sel.chosen.empty());
    EXPECT_FALSE(sel.class_mapping.at("vehicle").empty());
}

TEST(SelectData, UncoveredObjectsAreReported) {
    const auto reg = load_zoo(kData / "zoo.json");
    auto c = config_for(Task::classification);
    c.config.data.object = {"crops", "submarine"};
    const auto sel = select_data(c, reg, textmatch::Taxonomy{});
    EXPECT_EQ(sel.uncovered, std::vector<std::string>{"submarine"});
}

TEST(SelectData, NoTaskCardThrows) {
    const auto reg = parse_zoo(R"({"data": [], "models": []})");
    EXPECT_THROW(select_data(config_for(Task::keypoint), reg, textmatch::Taxonomy{}), SelectionError);
}

TEST(SelectData, SelectionRoundTripsThroughJson) {
    const auto reg = load_zoo(kData / "zoo.json");
    auto c = config_for(Task::detection);
    c.config.data.object = {"car", "person"};
    const auto sel = select_data(c, reg, textmatch::Taxonomy{});
    EXPECT_EQ(data_selection_from_json(to_json(sel)), sel);
}

TEST(SelectModel, FlopsConstraintExcludesLargeCard) {
    const auto reg = load_zoo(kData / "zoo.json");
    const auto gold = schema::parse_request_config(read_file(kFixtures / "crops_gold.json"), schema::ParseMode::strict);
    const auto card = select_model(schema::canonicalize(gold), reg);
    EXPECT_EQ(card.name, "vit-large-p16_in21k-pre_3rdparty_in1k-384px");
    EXPECT_LE(card.flops_g, 500.0);
    // Without the constraint the 600-GFLOP card wins on performance.
    EXPECT_EQ(select_model(config_for(Task::classification), reg).flops_g, 600.0);
}

TEST(SelectModel, RequestedModelWinsOnSimilarity) {
    const auto reg = load_zoo(kData / "zoo.json");
    auto c = config_for(Task::classification);
    c.config.model.specific_model = "resnet34";
    EXPECT_EQ(select_model(c, reg).name, "resnet34_8xb32_in1k");
}

TEST(SelectModel, PerformanceBreaksTies) {
    const auto reg = parse_zoo(R"({"data": [], "models": [)" + model_json("a", Task::segmentation, 10, 0.73) + "," +
                               model_json("b", Task::segmentation, 10, 0.76) + "]}");
    EXPECT_EQ(select_model(config_for(Task::segmentation), reg).name, "b");
}

TEST(SelectModel, ManifestOrderBreaksFullTies) {
    const auto reg = parse_zoo(R"({"data": [], "models": [)" + model_json("first", Task::keypoint, 10, 0.7) + "," +
                               model_json("second", Task::keypoint, 10, 0.7) + "]}");
    EXPECT_EQ(select_model(config_for(Task::keypoint), reg).name, "first");
}

TEST(SelectModel, ConstraintsAreInclusive) {
    const auto reg = parse_zoo(R"({"data": [], "models": [)" + model_json("edge", Task::detection, 20, 0.4) + "]}");
    auto c = config_for(Task::detection);
    c.flops_total = 20e9;
    EXPECT_EQ(select_model(c, reg).name, "edge");
    c.flops_total = 19.9e9;
    EXPECT_THROW(select_model(c, reg), SelectionError);
}
