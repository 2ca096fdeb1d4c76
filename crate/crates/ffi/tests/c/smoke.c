#include <stdio.h>
#include <string.h>
#include "riscrs.h"

#define CHECK(call)                                                        \
  do {                                                                     \
    RiscrsStatus st_ = (call);                                             \
    if (st_ != RISCRS_STATUS_OK) {                                         \
      const char *m_ = riscrs_last_error();                                \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)st_, m_ ? m_ : "");    \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  RiscrsScenario *sc = NULL;
  RiscrsChannel *ch = NULL;
  RiscrsSolution *sol = NULL;
  RiscrsReport rep;
  char *json = NULL;

  CHECK(riscrs_scenario_default(&sc));
  CHECK(riscrs_scenario_set_n_ris(sc, 2));
  if (riscrs_scenario_set_nt(sc, 0) != RISCRS_STATUS_INVALID_ARGUMENT) return 2;
  if (riscrs_last_error() == NULL) return 3;
  CHECK(riscrs_channel_build(sc, 7, &ch));
  if (riscrs_channel_nt(ch) != 2 || riscrs_channel_n_ris(ch) != 2) return 4;
  CHECK(riscrs_solve(sc, ch, RISCRS_STRATEGY_RIS_CRS, 1, &sol));
  CHECK(riscrs_solution_report(sol, &rep));
  if (!rep.feasible || !(rep.min_rate > 0.0)) return 5;
  CHECK(riscrs_solution_to_json(sol, &json));
  if (strstr(json, "\"strategy\"") == NULL) return 6;
  printf("%s %.6f\n", riscrs_version(), rep.min_rate);

  riscrs_string_free(json);
  riscrs_solution_free(sol);
  riscrs_channel_free(ch);
  riscrs_scenario_free(sc);
  return 0;
}
