"""
Build the HTML API reference of ``gfra`` with pdoc3:

```
python scripts/build_docs.py [-o docs/module] [--lang en]
```
"""

import argparse
import os
import subprocess
import sys

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

PDOC_OPTIONS = (
    'show_type_annotations=True',
    'show_inherited_members=True',
    'sort_identifiers=False',
)


def main(argv=None) -> int:
    summary = __doc__.strip().split("\n")[0]
    parser = argparse.ArgumentParser(description=summary)
    parser.add_argument('-o', '--out', default=os.path.join('docs', 'module'),
                        help='output directory, relative to the project root')
    parser.add_argument('--lang', default='en',
                        help='value of the html lang attribute')
    args = parser.parse_args(argv)

    cmd = [sys.executable, '-m', 'pdoc', '--html', '-f', '-o', args.out]
    for opt in PDOC_OPTIONS + (f"html_lang='{args.lang}'", ):
        cmd += ['-c', opt]
    cmd.append('gfra')
    return subprocess.call(cmd, cwd=ROOT)


if __name__ == '__main__':
    sys.exit(main())
