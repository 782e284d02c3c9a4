#include <gtest/gtest.h>

#include "support/builders.hpp"

using namespace llmsched;
using namespace llmsched::testing;

TEST(DurationDistribution, MidpointRepresentativeAndMean) {
  DurationDistribution d({{0, 0}, {2, 4}, {4, 10}}, {0.2, 0.5, 0.3});
  EXPECT_EQ(d.representative(), (std::vector<double>{0.0, 3.0, 7.0}));
  EXPECT_NEAR(d.mean(), 0.5 * 3 + 0.3 * 7, 1e-12);
  ASSERT_TRUE(d.zero_state());
  EXPECT_EQ(*d.zero_state(), 0u);
}

TEST(DurationDistribution, RejectsBadTables) {
  EXPECT_THROW(DurationDistribution({{0, 1}}, {0.9}), StructuralError);
  EXPECT_THROW(DurationDistribution({{0, 2}, {1, 3}}, {0.5, 0.5}), StructuralError);
  EXPECT_THROW(DurationDistribution({{2, 3}, {0, 1}}, {0.5, 0.5}), StructuralError);
  EXPECT_THROW(DurationDistribution({{0, 1}, {1, 2}}, {1.1, -0.1}), StructuralError);
  EXPECT_NO_THROW(DurationDistribution({{0, 1}, {1, 2}}, {0.5, 0.5}));  // touching intervals
}

TEST(DurationDistribution, StateOfUsesHalfOpenBinsAndClamps) {
  DurationDistribution d({{0, 0}, {1, 2}, {2, 5}}, {0.2, 0.4, 0.4});
  EXPECT_EQ(d.state_of(0.0), 0u);
  EXPECT_EQ(d.state_of(1.5), 1u);
  EXPECT_EQ(d.state_of(2.0), 2u);  // shared edge belongs to the upper interval
  EXPECT_EQ(d.state_of(5.0), 2u);
  EXPECT_EQ(d.state_of(80.0), 2u);  // above the max edge
  EXPECT_EQ(d.state_of(0.5), 1u);   // gap below the first positive interval
}

TEST(DurationDistribution, SupportIgnoresNegligibleMass) {
  DurationDistribution d({{0, 10}, {10, 30}}, {0.5, 0.5});
  EXPECT_DOUBLE_EQ(d.support().width(), 30.0);
  const std::vector<double> post{1.0, 0.0};
  EXPECT_DOUBLE_EQ(d.support_under(post).width(), 10.0);
}

TEST(Model, ValidateRejectsForwardPredecessors) {
  ApplicationTemplate a;
  a.app_id = "bad";
  a.stages = {stage(0, StageKind::Regular, {1}), stage(1, StageKind::Regular, {})};
  EXPECT_THROW(a.validate(), StructuralError);
}

TEST(Model, DynamicStageNeedsLlmPredecessor) {
  auto a = planning_app(2);
  a.stages[0].kind = StageKind::Regular;
  EXPECT_THROW(a.validate(), StructuralError);
}

TEST(Model, EdgeCandidatesMustAscend) {
  EXPECT_THROW(planning_app(3, {{3, 2}}), StructuralError);
  EXPECT_NO_THROW(planning_app(3, {{2, 3}}));
}

TEST(Job, TopologicalOrderChain) {
  const auto app = chain_app(3);
  const auto v = make_view(app, 0, 0.0);
  EXPECT_EQ(topological_stages(v), (std::vector<StageId>{0, 1, 2}));
}

TEST(Job, TopologicalOrderDiamondBreaksTiesById) {
  const auto app = diamond_app();
  const auto v = make_view(app, 0, 0.0);
  EXPECT_EQ(topological_stages(v), (std::vector<StageId>{0, 1, 2, 3}));
}

TEST(Job, TopologicalOrderSingleStage) {
  const auto app = chain_app(1);
  EXPECT_EQ(topological_stages(make_view(app, 0, 0.0)), (std::vector<StageId>{0}));
}

TEST(Job, TopologicalOrderDetectsCycle) {
  const auto app = chain_app(2);
  auto v = make_view(app, 0, 0.0);
  v.stage(0).predecessors.push_back(1);
  v.stage(1).successors.push_back(0);
  EXPECT_THROW(topological_stages(v), StructuralError);
}

TEST(Job, ReadyStages) {
  const auto app = chain_app(2);
  auto v = make_view(app, 0, 0.0);
  refresh_states(v);
  EXPECT_EQ(ready_stages(v), (std::vector<StageId>{0}));
  finish_stage(v, 0);
  EXPECT_EQ(ready_stages(v), (std::vector<StageId>{1}));
}

TEST(Job, Fig2TaskAutomationStartsWithPlannerOnly) {
  Fig2Scenario f;
  auto jobs = f.jobs();
  refresh_states(jobs[0].view);
  EXPECT_EQ(ready_stages(jobs[0].view), (std::vector<StageId>{0}));
}

TEST(Job, DynamicStageIsNeverReady) {
  const auto app = planning_app(2);
  auto v = make_view(app, 0, 0.0);
  finish_stage(v, 0);
  EXPECT_EQ(ready_stages(v), std::vector<StageId>{});
}

TEST(Job, ExpandEmptySubgraphLetsJobComplete) {
  const auto app = planning_app(2);
  auto v = make_view(app, 0, 0.0);
  finish_stage(v, 0);
  expand_dynamic(v, 1, {});
  EXPECT_EQ(v.stage(1).state, StageState::Skipped);
  EXPECT_EQ(v.stage(2).state, StageState::Skipped);
  EXPECT_EQ(v.stage(3).state, StageState::Skipped);
  EXPECT_TRUE(v.complete());
}

TEST(Job, ExpandTwoOfThreeWithOneEdge) {
  const auto app = planning_app(3, {{2, 3}, {3, 4}}, 0.5, true);
  auto v = make_view(app, 0, 0.0);
  finish_stage(v, 0);
  expand_dynamic(v, 1, RealizedSubgraph{{2, 3}, {{2, 3}}});
  EXPECT_EQ(v.stage(4).state, StageState::Skipped);
  EXPECT_EQ(v.stage(2).state, StageState::Ready);
  EXPECT_EQ(v.stage(3).state, StageState::Blocked);
  EXPECT_EQ(v.stage(3).predecessors, (std::vector<StageId>{1, 2}));
  // the sink now waits on both realized stages
  EXPECT_EQ(v.stage(5).predecessors, (std::vector<StageId>{1, 2, 3}));
  EXPECT_NO_THROW(topological_stages(v));
  EXPECT_EQ(v.revealed_subgraphs.at(1), (RealizedSubgraph{{2, 3}, {{2, 3}}}));
}

TEST(Job, ExpandRejectsForeignSubgraph) {
  const auto app = planning_app(3, {{2, 3}});
  auto v = make_view(app, 0, 0.0);
  finish_stage(v, 0);
  EXPECT_THROW(expand_dynamic(v, 1, RealizedSubgraph{{7}, {}}), StructuralError);
  EXPECT_THROW(expand_dynamic(v, 1, RealizedSubgraph{{2, 4}, {{2, 4}}}), StructuralError);
  EXPECT_THROW(expand_dynamic(v, 1, RealizedSubgraph{{2}, {{2, 3}}}), StructuralError);
}

TEST(Job, ExpandBeforePlannerFinishesIsAnError) {
  const auto app = planning_app(2);
  auto v = make_view(app, 0, 0.0);
  EXPECT_THROW(expand_dynamic(v, 1, RealizedSubgraph{{2}, {}}), StructuralError);
}

TEST(Job, SkippedPredecessorsCountAsMet) {
  const auto app = diamond_app();
  auto v = make_view(app, 0, 0.0);
  finish_stage(v, 0);
  finish_stage(v, 1);
  mark_skipped(v.stage(2));
  refresh_states(v);
  EXPECT_EQ(v.stage(3).state, StageState::Ready);
}
