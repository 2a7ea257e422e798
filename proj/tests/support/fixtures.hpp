#pragma once

#include <string>
#include <vector>

#include "symplanner/blocksworld.hpp"
#include "symplanner/core.hpp"

namespace fixtures {

namespace bw = symplanner::blocksworld;
using symplanner::AtomSet;
using symplanner::Goal;
using symplanner::Problem;
using symplanner::State;

inline State state(std::initializer_list<const char*> atoms) {
  std::vector<std::string> v(atoms.begin(), atoms.end());
  return State{AtomSet::from_strings(v)};
}

inline Goal goal(std::initializer_list<const char*> atoms) {
  std::vector<std::string> v(atoms.begin(), atoms.end());
  return Goal{AtomSet::from_strings(v)};
}

/// C on A, A and B on the table; goal A on B on C.
inline Problem sussman() {
  return bw::make_problem(bw::Vocabulary({"a", "b", "c"}),
                          state({"on(c,a)", "ontable(a)", "ontable(b)", "clear(c)", "clear(b)", "handempty"}),
                          goal({"on(a,b)", "on(b,c)"}));
}

/// Orange on blue, red on the table; goal blue on orange.
inline Problem example1() {
  return bw::make_problem(
      bw::Vocabulary({"blue", "orange", "red"}),
      state({"clear(orange)", "clear(red)", "handempty", "on(orange,blue)", "ontable(blue)", "ontable(red)"}),
      goal({"on(blue,orange)"}));
}

/// Orange on blue on red, yellow on the table; goal blue on red and yellow on orange.
inline Problem example2() {
  return bw::make_problem(bw::Vocabulary({"blue", "orange", "red", "yellow"}),
                          state({"clear(orange)", "clear(yellow)", "handempty", "on(blue,red)", "on(orange,blue)",
                                 "ontable(red)", "ontable(yellow)"}),
                          goal({"on(blue,red)", "on(yellow,orange)"}));
}

}  // namespace fixtures
