from vbec.cli import main

raise SystemExit(main())
