"""Run an SMT-LIB2 script from stdin (or a file argument) through cvc5's Python API.

Lets ``python -m verigb.cvc5_shim`` stand in as a solver command where only
the cvc5 wheel, not the cvc5 binary, is installed.
"""

import sys


def main(argv=None) -> int:
    import cvc5

    argv = sys.argv[1:] if argv is None else argv
    text = open(argv[0]).read() if argv else sys.stdin.read()
    tm = cvc5.TermManager()
    solver = cvc5.Solver(tm)
    symbols = cvc5.SymbolManager(tm)
    parser = cvc5.InputParser(solver, symbols)
    parser.setStringInput(cvc5.InputLanguage.SMT_LIB_2_6, text, "input")
    while True:
        try:
            cmd = parser.nextCommand()
        except RuntimeError as exc:
            print(f'(error "{exc}")', flush=True)
            return 1
        if cmd.isNull():
            return 0
        try:
            out = cmd.invoke(solver, symbols)
        except RuntimeError as exc:
            print(f'(error "{exc}")', flush=True)
            continue
        if out:
            sys.stdout.write(out)
            sys.stdout.flush()


if __name__ == "__main__":
    sys.exit(main())
