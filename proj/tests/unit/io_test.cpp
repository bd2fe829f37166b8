#include <limits>

#include <gtest/gtest.h>

#include <stopwise/errors.hpp>
#include <stopwise/io.hpp>

#include "generators.hpp"

namespace stopwise {
namespace {

TEST(JsonIo, UtilityRoundTrip) {
  for (const Utility& u : {Utility::linear(), Utility::exponential(-1.5), Utility::power(0.5, 2.0), Utility::log(1.0)}) {
    const Utility back = utility_from_json(to_json(u));
    EXPECT_EQ(back.family(), u.family());
    EXPECT_EQ(back(1.25), u(1.25));
  }
  EXPECT_THROW(utility_from_json(json{{"family", "exponential"}}), InvalidArgument);
  EXPECT_THROW(utility_from_json(json{{"family", "cubic"}}), InvalidArgument);
  EXPECT_THROW(utility_from_json(json{{"family", "exponential"}, {"gamma", 1.0}}), InvalidArgument);
}

TEST(JsonIo, BeliefRoundTrip) {
  const Belief beliefs[] = {BetaBernoulli(2, 3), InvGammaExp(3, 2, 1.5, 2),
                            DiscretePosterior({0.2, 0.8}, {0.4, 0.6}, BernoulliOffers{})};
  for (const Belief& b : beliefs) EXPECT_EQ(belief_from_json(to_json(b)), b);
  EXPECT_THROW(belief_from_json(json{{"type", "beta_bernoulli"}, {"alpha", 1}}), InvalidArgument);
  EXPECT_THROW(belief_from_json(json{{"type", "discrete"}, {"theta", {0.5}}, {"weights", {1.0}}}), InvalidArgument);
  EXPECT_THROW(belief_from_json(json{{"type", "dirichlet"}}), InvalidArgument);
}

TEST(JsonIo, HouseModelRoundTrip) {
  testing::Rng rng(21);
  for (int i = 0; i < 20; ++i) {
    const HouseModel m = testing::random_house(rng);
    const json j = to_json(m);
    const HouseModel back = house_model_from_json(j);
    EXPECT_EQ(to_json(back), j);
    EXPECT_EQ(model_hash(to_json(back)), model_hash(j));
  }
  HouseModel inf = figure1_model(-1.0);
  inf.horizon.reset();
  EXPECT_EQ(to_json(inf)["horizon"], "infinite");
  EXPECT_FALSE(house_model_from_json(to_json(inf)).horizon.has_value());
}

TEST(JsonIo, HouseModelErrorsNameTheField) {
  json j = to_json(figure1_model(-1.0));
  j.erase("cost");
  try {
    house_model_from_json(j);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("cost"), std::string::npos);
  }
  j = to_json(figure1_model(-1.0));
  j["horizon"] = 2.5;
  EXPECT_THROW(house_model_from_json(j), InvalidArgument);
  j = to_json(figure1_model(-1.0));
  j["cost"] = -1.0;
  EXPECT_THROW(house_model_from_json(j), InvalidArgument);
}

TEST(JsonIo, PomdpRoundTripAndDispatch) {
  testing::Rng rng(4);
  const PartiallyObservableModel m = testing::random_pomdp(rng);
  const json j = to_json(m, Utility::exponential(-1.0));
  const ModelFile f = model_from_json(j);
  ASSERT_TRUE(std::holds_alternative<PomdpFile>(f));
  const PomdpFile& p = std::get<PomdpFile>(f);
  EXPECT_EQ(p.model.q, m.q);
  ASSERT_TRUE(p.utility.has_value());
  EXPECT_EQ(p.utility->gamma(), -1.0);
  EXPECT_THROW(model_from_json(json{{"kind", "mdp"}}), InvalidArgument);
  EXPECT_THROW(load_model_file("/nonexistent/model.json"), InvalidArgument);
}

TEST(JsonIo, ModelHashIsStableAndSensitive) {
  const json a = to_json(figure1_model(-1.0));
  EXPECT_EQ(model_hash(a).size(), 16u);
  EXPECT_EQ(model_hash(a), model_hash(json::parse(a.dump())));
  EXPECT_NE(model_hash(a), model_hash(to_json(figure1_model(-1.1))));
  // FNV-1a of the two bytes "{}".
  EXPECT_EQ(model_hash(json::object()), "08f44b07b5901a25");
}

TEST(Csv, NumberFormatting) {
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(-0.657019801099788), "-0.6570198011");
  EXPECT_EQ(format_number(1.0 / 3.0), "0.333333333333");
  EXPECT_EQ(format_number(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(number_or_null(kNoLevel), nullptr);
}

TEST(Csv, TablesHaveHeaders) {
  const ReservationTable t = reservation_levels_finite(figure1_model(-1.0, 0.1, 2));
  const std::string csv = to_csv(t);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "stage,belief,level");
  EXPECT_NE(csv.find("\"beta(1,2)\""), std::string::npos);
  Figure1Result r;
  r.bands = {{-std::numeric_limits<double>::infinity(), -1.0, 0}, {-1.0, 0.0, 1}};
  EXPECT_EQ(to_csv(r), "gamma_lower,gamma_upper,rejected_zeros\n-inf,-1,0\n-1,0,1\n");
}

TEST(JsonIo, ReportsSerializeNonFiniteAsNull) {
  AdviceStep step;
  step.stage = 10;
  const json j = to_json(step);
  EXPECT_TRUE(j["level"].is_null());
  EXPECT_EQ(j["stage"], 10);
}

}  // namespace
}  // namespace stopwise
