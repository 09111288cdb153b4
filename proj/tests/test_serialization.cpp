#include <random>

#include "doctest.h"
#include "support.hpp"
#include "vesselsynth/errors.hpp"
#include "vesselsynth/serialization.hpp"

using namespace vsynth;
using nlohmann::json;

TEST_CASE("curves round trip") {
  std::mt19937_64 gen(51);
  for (int order = 3; order <= 5; ++order) {
    const auto c = oracle::random_curve(gen, order);
    CHECK(curve_from_json(json::parse(to_json(c).dump())) == c);
  }
  json bad = to_json(oracle::random_curve(gen, 3));
  bad["order"] = 4;
  CHECK_THROWS_AS(curve_from_json(bad), ParseError);
  CHECK_THROWS_AS(curve_from_json(json::object()), ParseError);
}

TEST_CASE("params and trees round trip") {
  SkeletonParams sp = SkeletonParams::for_canvas(300, 200);
  sp.seed = 77;
  sp.omega = 3;
  const SkeletonParams sp2 = skeleton_params_from_json(json::parse(to_json(sp).dump()));
  CHECK(to_json(sp2) == to_json(sp));

  SynthesisParams syn;
  syn.curve_order = 4;
  syn.seed = 12;
  CHECK(to_json(synthesis_params_from_json(to_json(syn))) == to_json(syn));

  FitParams fp;
  fp.budget = 77;
  fp.hop_max = 20;
  CHECK(to_json(fit_params_from_json(to_json(fp))) == to_json(fp));
  CHECK_THROWS_AS(fit_params_from_json(json{{"budget", "many"}}), ParseError);

  const SkeletonNode tree = generate_skeleton(sp);
  CHECK(to_json(skeleton_from_json(to_json(tree))) == to_json(tree));
}
