"""How good are the closed-form stand-ins for the two awkward nonlinearities?

The interference kernel log10((d + b/2)/(d - b/2)) and the required-OSNR
curve both get replaced by posynomial-friendly fits so the assignment stage
stays a geometric program.  This script prints the error profiles.
"""

from eongp import physics
from eongp.model import ModulationTable


def main():
    grid = physics.log_kernel_error_grid()
    print("overlap-kernel fits, relative error vs bandwidth/spacing ratio x")
    print("    x     linear     +cubic")
    for x in (0.1, 0.3, 0.5, 0.8, 1.0, 1.2):
        i = list(grid["x"]).index(x)
        print(f"  {x:4.2f}  {grid['rel_err1'][i]:+8.3%}  {grid['rel_err3'][i]:+8.3%}")
    print(f"  worst over the fitted range: linear {max(abs(grid['rel_err1'])):.2%}, "
          f"cubic {max(abs(grid['rel_err3'])):.2%}")

    table = ModulationTable()
    cols = physics.osnr_fit_error_table(table)
    print("\nrequired-OSNR fits vs the hardware table")
    print("  eff   table     power_law      binomial_int   binomial_frac")
    for i, eff in enumerate(cols["eff"]):
        row = [f"{cols[fit][i]:9.2f} ({cols['rel_err_' + fit][i]:+6.1%})"
               for fit in physics.OSNR_FITS]
        print(f"  {eff:4.0f}  {cols['table'][i]:7.2f}  " + "  ".join(row))

    worst = {fit: max(abs(cols["rel_err_" + fit])) for fit in physics.OSNR_FITS}
    best = min(worst, key=worst.get)
    print(f"\n  tightest fit overall: {best} "
          f"(max error {worst[best]:.1%}); the power law sags badly at the "
          f"low end but all three agree near the top of the table")


if __name__ == "__main__":
    main()
