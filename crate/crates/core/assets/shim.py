# Guest-side runner for generated graph programs.
#
# Reads program text from stdin and executes it in a fresh namespace where
# `nodes` and `edges` are predeclared as empty lists. On success the value of
# `ans` is written as one line: CODEGRAPH_ANS<TAB><str(ans)>, with backslash,
# carriage return and newline escaped as \\, \r and \n.
#
# Exit codes: 0 result line written, 1 the program raised, 3 no `ans` binding.
import sys

RESULT_PREFIX = "CODEGRAPH_ANS\t"


def main():
    source = sys.stdin.read()
    namespace = {"__name__": "__main__", "nodes": [], "edges": []}
    try:
        exec(compile(source, "<generated>", "exec"), namespace)
    except BaseException as exc:
        sys.stderr.write("%s: %s\n" % (type(exc).__name__, exc))
        return 1
    if "ans" not in namespace:
        sys.stderr.write("program finished without binding `ans`\n")
        return 3
    text = str(namespace["ans"])
    text = text.replace("\\", "\\\\").replace("\r", "\\r").replace("\n", "\\n")
    sys.stdout.write("\n" + RESULT_PREFIX + text + "\n")
    sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
